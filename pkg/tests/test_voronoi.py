import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from divzeta import voronoi as v
from divzeta.error_terms import circle_p, cusp_a, delta, delta_star
from divzeta.errors import InvalidArgumentError


@pytest.mark.parametrize("kind,fixture", [("delta", "d_table"), ("delta_star", "d_table"),
                                          ("circle", "r_table"), ("cusp", "tau_table")])
def test_zero_terms_is_zero(kind, fixture, request):
    table = request.getfixturevalue(fixture)
    assert v.series(kind, 12345.5, 0, table) == 0.0


@pytest.mark.parametrize("kind,fixture", [("delta", "d_table"), ("circle", "r_table"),
                                          ("cusp", "tau_table")])
@pytest.mark.parametrize("x", [10.5, 12345.5, 987654.25])
def test_single_terms_against_high_precision(kind, fixture, x, request):
    table = request.getfixturevalue(fixture)
    n = np.array([1, 2, 5])
    got = v.terms(kind, x, n, table)
    for i, k in enumerate(n):
        ref = oracles.voronoi_term_oracle(kind, x, int(k), int(table.values[k]))
        scale = abs(float(ref)) + 1e-12 * x ** v.SHAPES[v.ErrorTermKind.parse(kind)].power
        assert abs(got[i] - float(ref)) <= 1e-10 * scale


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_reduced_phase_exact(n, m):
    x = m + 0.5
    u = v.reduced_phase(n, x, 2, -0.125)
    with mpmath.workdps(40):
        ref = mpmath.frac(2 * mpmath.sqrt(mpmath.mpf(n) * x) - mpmath.mpf(1) / 8)
    diff = abs(float(u) - float(ref))
    assert min(diff, 1 - diff) < 1e-9


def test_series_equals_sum_of_terms(d_table):
    x = 54321.5
    n = np.arange(1, 501)
    assert v.voronoi_delta(x, 500, d_table) == pytest.approx(v.terms("delta", x, n, d_table).sum(),
                                                             rel=1e-12, abs=1e-12)


def test_delta_star_first_term_is_negated(d_table):
    x = 777.5
    a = v.terms("delta_star", x, [1], d_table)[0]
    b = v.terms("delta", x, [1], d_table)[0]
    assert a == -b


def test_alternating_recombination(d_table):
    # sum (-1)^n t_n = 2 * sum_{n even} t_n - sum t_n
    N = 1000
    for x in (1000.5, 33333.5, 99999.5):
        n_even = np.arange(2, N + 1, 2)
        even = v.terms("delta", x, n_even, d_table).sum()
        recombined = 2 * even - v.voronoi_delta(x, N, d_table)
        assert v.voronoi_delta_star(x, N, d_table) == pytest.approx(recombined, abs=1e-9)


def test_delta_within_band(d_table):
    x, N = 1e5 + 0.5, 10**4
    assert abs(v.voronoi_delta(x, N, d_table) - delta(x, d_table)) <= 3 * x**0.5 * N**-0.5


def test_delta_star_within_band(d_table):
    x, N = 1e4 + 0.5, 10**4
    err = abs(v.voronoi_delta_star(x, N, d_table) - delta_star(x, d_table).combination)
    assert err <= 3 * x**0.5 * N**-0.5


def test_circle_within_band(r_table):
    x, N = 1e5 + 0.5, 10**4
    assert abs(v.voronoi_circle(x, N, r_table) - circle_p(x, r_table)) <= 3 * x**0.5 * N**-0.5


def test_cusp_within_band(tau_table):
    x, N = 1e4 + 0.5, 10**3
    err = abs(v.voronoi_cusp(x, N, tau_table) - cusp_a(x, tau_table))
    assert err <= 3 * x**6 * N**-0.5


def test_circle_leading_term_flips_sign_across_zero(r_table):
    # cos(2 pi sqrt(x) + pi/4) = 0 at sqrt(x) = 1/8 + k/2
    root = (0.125 + 50) ** 2
    before = v.terms("circle", root - 1e-3, [1], r_table)[0]
    after = v.terms("circle", root + 1e-3, [1], r_table)[0]
    assert before * after < 0
    assert abs(v.terms("circle", root, [1], r_table)[0]) < 1e-6


def test_cusp_rms_decreases_with_n(tau_table):
    study = v.truncation_study("cusp", tau_table, (100, 1000, 10000), 200, (1e4, 2e4), 0)
    assert study.rms_errors[0] > study.rms_errors[1] > study.rms_errors[2]


@pytest.mark.parametrize("kind,fixture", [("delta", "d_table"), ("circle", "r_table")])
def test_rms_decreases_with_n(kind, fixture, request):
    table = request.getfixturevalue(fixture)
    study = v.truncation_study(kind, table, (10, 100, 1000), 300, (1e4, 2e4), 0)
    assert list(study.rms_errors) == sorted(study.rms_errors, reverse=True)


@pytest.mark.xfail(strict=True, reason="mean-square truncation error decays like N^(-1/4), "
                   "not N^(-1/2); see decisions ledger")
@pytest.mark.parametrize("kind,fixture", [("delta", "d_table"), ("circle", "r_table")])
def test_rms_slope_in_half_power_band(kind, fixture, request):
    table = request.getfixturevalue(fixture)
    study = v.truncation_study(kind, table, (10, 100, 1000), 300, (1e4, 2e4), 0)
    assert -0.7 <= study.slope <= -0.3


@pytest.mark.xfail(strict=True, reason="observed RMS ratio ~2.2, consistent with N^(-1/4); "
                   "see decisions ledger")
def test_rms_ratio_n100_vs_n10000(d_table):
    study = v.truncation_study("delta", d_table, (100, 10**4), 1000, (1e5, 2e5), 0)
    assert 5 <= study.rms_errors[0] / study.rms_errors[1] <= 20


def test_truncation_study_is_deterministic(d_table):
    a = v.truncation_study("delta", d_table, (10, 100), 100, (1e4, 2e4), 5)
    b = v.truncation_study("delta", d_table, (10, 100), 100, (1e4, 2e4), 5)
    assert a == b


def test_half_integer_samples():
    x = v.half_integer_samples(100, 200, 50, 1)
    assert np.all(x % 1 == 0.5) and x.min() >= 100.5 and x.max() < 200
    assert np.array_equal(x, v.half_integer_samples(100, 200, 50, 1))


def test_default_terms():
    assert v.default_terms(1e6) == 10**4
    assert v.default_terms(1000) == 100
    assert v.default_terms(999.5) == 99
    assert v.default_terms(2e5) == 3419


def test_bad_arguments(d_table, r_table):
    with pytest.raises(InvalidArgumentError):
        v.voronoi_delta(100.5, -1, d_table)
    with pytest.raises(InvalidArgumentError):
        v.voronoi_circle(100.5, 10, d_table)

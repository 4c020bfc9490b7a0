import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from divzeta import moments as m
from divzeta import zeta_line
from divzeta.arith_tables import build_table
from divzeta.error_terms import delta_difference
from divzeta.errors import FitFailureError, InvalidArgumentError, OutOfRangeError


@pytest.fixture(scope="module")
def e_curve():
    return zeta_line.build_e_curve(9000.0, 2.1e4)


def test_c3_reference():
    assert m.C3_REFERENCE == pytest.approx(0.810569, abs=1e-6)


def test_delta_sum_zero_u(d_table):
    rep = m.delta_diff_sq_sum(100, 0, d_table)
    assert rep.moment == 0.0


def test_delta_sum_matches_brute_force(d_table):
    T, U = 100, 2
    ref = sum((oracles.delta_oracle(n + U) - oracles.delta_oracle(n)) ** 2
              for n in range(T, 2 * T + 1))
    assert m.delta_diff_sq_sum(T, U, d_table).moment == pytest.approx(ref, rel=1e-11)


def test_report_schema(d_table):
    rep = m.delta_diff_sq_sum(1000, 5, d_table)
    out = rep.to_dict()
    assert list(out) == list(m.MomentReport.JSON_FIELDS)
    assert out["ratio"] == pytest.approx(rep.moment / rep.main_term)
    assert rep.leading_reference == m.C3_REFERENCE


@given(st.integers(10, 50_000), st.integers(0, 200))
def test_moments_non_negative(d_table, T, U):
    assert m.delta_diff_sq_sum(T, U, d_table).moment >= 0


def test_discrete_vs_continuous(d_table):
    T, U = 10**4, 10
    discrete = m.delta_diff_sq_sum(T, U, d_table).moment
    mids = np.arange(T, 2 * T) + 0.5
    continuous = float(np.sum(delta_difference(mids, U, d_table) ** 2))
    C = abs(discrete - continuous) / (U**2.5 * math.log(T) ** 2.5)
    assert C <= 10


def test_fit_scale_equivariance(d_table):
    T = 10**5
    us = m.default_u_grid(T)
    values = [m.delta_diff_sq_sum(T, U, d_table).moment for U in us]
    a = m._fit("delta", T, us, values, 3, m.C3_REFERENCE)
    b = m._fit("delta", T, us, [3.5 * v for v in values], 3, m.C3_REFERENCE)
    assert np.allclose(b.coeffs, 3.5 * np.array(a.coeffs), rtol=1e-9, atol=1e-12)


def test_delta_fit_needs_six_points(d_table):
    with pytest.raises(InvalidArgumentError):
        m.delta_moment_fit(10**5, (3, 5, 8, 13, 21), d_table)


def test_default_u_grid():
    us = m.default_u_grid(10**7)
    assert len(us) >= 6 and us[0] == round((10**7) ** 0.25) and us[-1] == round((10**7) ** 0.45)


def test_e_moment_zero_u(e_curve):
    assert m.e_diff_sq_integral(1e4, 0, e_curve).moment == 0.0


def test_e_moment_grid_halving(e_curve):
    a = m.e_diff_sq_integral(1e4, 20, e_curve).moment
    b = m.e_diff_sq_integral(1e4, 20, e_curve, step=0.125).moment
    assert abs(a - b) <= 0.01 * abs(b)


@pytest.mark.xfail(strict=True, reason="at T = 1e4 lower-order terms dominate the "
                   "log^3 normalisation; see decisions ledger")
def test_e_moment_linear_growth_band(e_curve):
    T = 1e4
    norm = [m.e_diff_sq_integral(T, U, e_curve).moment / (U * m.log_ratio(T, U) ** 3)
            for U in (5, 10, 20, 40)]
    assert max(norm) / min(norm) <= 2 and min(norm) / max(norm) >= 0.5


def test_e_moment_out_of_range(e_curve):
    with pytest.raises(OutOfRangeError):
        m.e_diff_sq_integral(5000, 10, e_curve)


def test_jutila_zero_u(d_table):
    res = m.jutila_identity_check(1000, 1000, 0, d_table)
    assert res.lhs == 0.0 and res.rhs == 0.0


def test_jutila_inner_integral_forms_agree():
    n = np.arange(1, 200)
    a = m.jutila_inner_integral(n, 13, 1e4, 2e4, "exp")
    b = m.jutila_inner_integral(n, 13, 1e4, 2e4, "sin")
    assert np.allclose(a, b, rtol=1e-10, atol=0)


def test_jutila_inner_integral_against_mpmath():
    n, U, a, b = 7, 5, 1000.0, 1500.0
    with mpmath.workdps(25):
        ref = mpmath.quad(lambda x: 4 * mpmath.sqrt(x)
                          * mpmath.sin(mpmath.pi * U * mpmath.sqrt(n / x)) ** 2,
                          mpmath.linspace(a, b, 20))
    assert m.jutila_inner_integral(n, U, a, b)[0] == pytest.approx(float(ref), rel=1e-10)


def test_jutila_sides_positive(d_table):
    res = m.jutila_identity_check(10**4, 10**4, 10, d_table)
    assert res.lhs > 0 and res.rhs > 0
    assert 0.5 < res.ratio < 2


@pytest.mark.xfail(strict=True, reason="the truncated series side carries an error of "
                   "order H U^(1/2); the ratio does not approach 1 monotonically at "
                   "reachable T; see decisions ledger")
def test_jutila_ratio_approaches_one(d_table):
    T = 10**5
    gaps = [abs(m.jutila_identity_check(T, T, U, d_table).ratio - 1) for U in (10, 30, 100)]
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_circle_zero_u(r_table):
    assert m.circle_diff_sq_integral(100, 0, r_table).moment == 0.0


def test_circle_matches_brute_force(r_table):
    T, U = 100, 3
    ref = sum((oracles.circle_oracle(k + 0.5 + U) - oracles.circle_oracle(k + 0.5)) ** 2
              for k in range(T, 2 * T))
    assert m.circle_diff_sq_integral(T, U, r_table).moment == pytest.approx(ref, rel=1e-11)


def test_circle_fit_residual():
    T = 10**7
    r = build_table("r", 2 * T + 2000)
    fit = m.circle_moment_fit(T, m.default_u_grid(T), r)
    assert fit.coeffs[1] > 0
    assert fit.residual <= 0.20


def test_circle_fit_rejects_non_positive_slope(r_table, monkeypatch):
    monkeypatch.setattr(m, "circle_diff_sq_integral",
                        lambda T, U, t: m._report("circle", T, U, 2, 1e6 * U * U, 1.0, 0.0))
    with pytest.raises(FitFailureError):
        m.circle_moment_fit(10**4, (2, 4, 8, 16, 32, 64), r_table)


def test_cusp_zero_u(tau_table):
    assert m.cusp_diff_sq_integral(200, 0, tau_table).moment == 0.0


def test_cusp_matches_brute_force(tau_table, tau_oracle):
    T, U = 200, 2
    A = np.cumsum([0] + tau_oracle[1:], dtype=object)
    ref = sum(float(A[k + U] - A[k]) ** 2 for k in range(T, 2 * T))
    assert m.cusp_diff_sq_integral(T, U, tau_table).moment == pytest.approx(ref, rel=1e-12)


def test_cusp_ratio_band(tau_table):
    ratios = [m.cusp_diff_sq_integral(10**4, U, tau_table).ratio for U in (2, 4, 8, 16)]
    assert max(ratios) / min(ratios) <= 2


def test_fourth_moment_zero_g(d_table):
    assert m.fourth_moment_probe("delta", 1000, 0, divisor_table=d_table).moment == 0.0


def test_fourth_moment_matches_brute_force(d_table):
    T = 1000
    G = int(T**0.4)
    ref = sum((oracles.delta_oracle(k + 0.5 + G) - oracles.delta_oracle(k + 0.5 - G)) ** 4
              for k in range(T, 2 * T))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        got = m.fourth_moment_probe("delta", T, G, divisor_table=d_table)
    assert got.moment == pytest.approx(ref, rel=1e-10)
    assert got.ratio == pytest.approx(ref / (T * G * G), rel=1e-10)


def test_fourth_moment_warns_outside_window(d_table):
    with pytest.warns(UserWarning):
        m.fourth_moment_probe("delta", 10**5, 2, divisor_table=d_table)


def test_fourth_moment_e(e_curve):
    rep = m.fourth_moment_probe("E", 1e4, 40, e_curve=e_curve)
    assert rep.moment > 0 and rep.k == 4


def test_omega_probe_reproducible(d_table):
    a = m.omega_probe("delta", 10**5, 32, 10**4, seed=4, divisor_table=d_table)
    b = m.omega_probe("delta", 10**5, 32, 10**4, seed=4, divisor_table=d_table)
    assert a == b and a > 0


def test_omega_probe_monotone_in_samples(d_table, e_curve):
    small = m.omega_probe("delta", 10**5, 32, 1000, seed=9, divisor_table=d_table)
    big = m.omega_probe("delta", 10**5, 32, 10_000, seed=9, divisor_table=d_table)
    assert big >= small
    small = m.omega_probe("E", 1e4, 20, 500, seed=2, e_curve=e_curve)
    big = m.omega_probe("E", 1e4, 20, 5000, seed=2, e_curve=e_curve)
    assert big >= small >= 0


def test_omega_probe_arguments(d_table):
    with pytest.raises(InvalidArgumentError):
        m.omega_probe("delta", 10**4, 100, 10, divisor_table=d_table)


def test_sinc_integral():
    assert abs(m.sinc_sq_integral(1e-6, 1e8) - math.pi / 2) <= 3e-6
    assert m.sinc_sq_integral(1, 1) == 0.0
    with mpmath.workdps(30):
        ref = mpmath.quad(lambda y: (mpmath.sin(y) / y) ** 2, [0.5, 2])
    assert abs(m.sinc_sq_integral(0.5, 2) - float(ref)) <= 1e-8


def test_sinc_integral_tail_against_closed_form():
    # int_a^b sin^2/y^2 = [Si(2y) - sin^2(y)/y]_a^b
    def F(y):
        return float(mpmath.si(2 * y) - mpmath.sin(y) ** 2 / y)
    for a, b in ((0.1, 500.0), (1.0, 1e4), (1e-3, 1e6)):
        assert m.sinc_sq_integral(a, b) == pytest.approx(F(b) - F(a), abs=1e-9)


def test_experiment_config_validation():
    with pytest.raises(InvalidArgumentError):
        m.MomentExperimentConfig(kind="delta", T=-5, U=1)
    with pytest.raises(InvalidArgumentError):
        m.MomentExperimentConfig(kind="delta", T=100.5, U=1)
    with pytest.raises(InvalidArgumentError):
        m.MomentExperimentConfig(kind="delta", T=100, U=1, k=3)
    with pytest.warns(UserWarning):
        m.MomentExperimentConfig(kind="delta", T=100, U=9)
    m.MomentExperimentConfig(kind="E", T=1e4, U=2.5, sampling="quadrature")

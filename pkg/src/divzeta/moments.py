"""Short-interval moment experiments for Delta, P, A and E.

Discrete error terms are sampled at half-integers (m + 1/2), so a unit-
weight sum over m = T..2T-1 is the midpoint rule for the integral over
[T, 2T] and never lands on a jump. E moments use composite Simpson on a
uniform grid through the interpolated curve.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .arith_tables import Kind, fit_polynomial_centered
from .error_terms import (EULER_GAMMA, ErrorTermKind, circle_difference,
                          cusp_difference, delta_difference)
from .errors import FitFailureError, InvalidArgumentError, OutOfRangeError

C3_REFERENCE = 8 / math.pi**2
_CHUNK = 1 << 21


@dataclass(frozen=True)
class MomentExperimentConfig:
    kind: str
    T: float
    U: float
    k: int = 2
    sampling: str = "half_integer"  # "integer", "half_integer" or "quadrature"
    fit_U_grid: tuple | None = None

    def __post_init__(self):
        if self.k not in (2, 4):
            raise InvalidArgumentError("k must be 2 or 4")
        if self.sampling not in ("integer", "half_integer", "quadrature"):
            raise InvalidArgumentError(f"unknown sampling {self.sampling!r}")
        if self.U < 0 or self.T <= 0:
            raise InvalidArgumentError("need T > 0 and U >= 0")
        if self.sampling != "quadrature" and (self.U != int(self.U) or self.T != int(self.T)):
            raise InvalidArgumentError("discrete sums need integer T and U")
        if self.k == 2 and self.U > 0.5 * math.sqrt(self.T):
            warnings.warn(f"U={self.U} above sqrt(T)/2; outside the asymptotic range",
                          stacklevel=2)
        if self.k == 4 and self.U > 0 and not (self.T**0.375 <= self.U <= self.T**0.5):
            warnings.warn(f"G={self.U} outside [T^(3/8), T^(1/2)]", stacklevel=2)


@dataclass(frozen=True)
class MomentReport:
    kind: str
    T: float
    U: float
    k: int
    moment: float
    main_term: float
    ratio: float | None
    coeffs: tuple | None = None
    seed: int | None = None
    runtime_s: float = 0.0
    leading_reference: float | None = None

    JSON_FIELDS = ("kind", "T", "U", "k", "moment", "main_term", "ratio",
                   "coeffs", "seed", "runtime_s")

    def to_dict(self):
        out = {}
        for name in self.JSON_FIELDS:
            v = getattr(self, name)
            out[name] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)


def _report(kind, T, U, k, moment, main, start, coeffs=None, seed=None, reference=None):
    ratio = moment / main if main else None
    return MomentReport(kind, T, U, k, float(moment), float(main), ratio,
                        None if coeffs is None else tuple(float(c) for c in coeffs),
                        seed, time.perf_counter() - start, reference)


def _require_int(name, v):
    if v != int(v) or v < 0:
        raise InvalidArgumentError(f"{name} must be a non-negative integer, got {v}")
    return int(v)


def _check_kind(table, kind):
    if table.kind is not kind:
        raise InvalidArgumentError(f"expected a {kind.name} table")


def _chunked_power_sum(points, func, power):
    total = 0.0
    for start in range(0, points.shape[0], _CHUNK):
        v = func(points[start:start + _CHUNK])
        total += float(np.sum(v**power))
    return total


def log_ratio(T, U):
    """lambda = log(sqrt(T) / U)."""
    return math.log(math.sqrt(T) / U)


def delta_diff_sq_sum(T, U, divisor_table):
    """sum_{T<=n<=2T} (Delta(n+U) - Delta(n))^2 with its c3 main term."""
    start = time.perf_counter()
    _check_kind(divisor_table, Kind.DIVISOR)
    T, U = _require_int("T", T), _require_int("U", U)
    if T < 1:
        raise InvalidArgumentError("T must be >= 1")
    if 2 * T + U > divisor_table.limit:
        raise OutOfRangeError(f"2T + U = {2 * T + U} beyond table limit")
    if U == 0:
        return _report("delta", T, 0, 2, 0.0, 0.0, start, reference=C3_REFERENCE)
    n = np.arange(T, 2 * T + 1, dtype=np.float64)
    moment = _chunked_power_sum(n, lambda x: delta_difference(x, U, divisor_table), 2)
    main = T * U * C3_REFERENCE * log_ratio(T, U) ** 3
    return _report("delta", T, U, 2, moment, main, start, reference=C3_REFERENCE)


@dataclass(frozen=True)
class MomentFit:
    kind: str
    T: float
    U_values: tuple
    lambdas: tuple
    normalized: tuple  # moment / (T U)
    coeffs: tuple      # ascending powers of lambda
    leading_reference: float | None
    relative_error: float | None
    residual: float    # max |fit - data| / |fitted main term|

    @property
    def leading(self):
        return self.coeffs[-1]


def _fit(kind, T, U_values, values, degree, reference):
    lam = np.array([log_ratio(T, U) for U in U_values])
    y = np.array(values) / (T * np.array(U_values, dtype=np.float64))
    coeffs, _ = fit_polynomial_centered(lam, y, degree)
    model = np.polynomial.polynomial.polyval(lam, coeffs)
    residual = float(np.max(np.abs(model - y) / np.abs(model)))
    rel = abs(coeffs[-1] - reference) / reference if reference else None
    return MomentFit(kind, T, tuple(int(u) for u in U_values), tuple(lam.tolist()),
                     tuple(y.tolist()), tuple(coeffs.tolist()), reference, rel, residual)


def default_u_grid(T, lo=0.25, hi=0.45, count=9):
    """Distinct integers round(T^e) for e evenly spaced in [lo, hi]."""
    us = sorted({max(1, int(round(T**e))) for e in np.linspace(lo, hi, count)})
    return tuple(us)


def delta_moment_fit(T, U_values, divisor_table):
    """Cubic fit in lambda of the Delta moment / (T U)."""
    if len(U_values) < 6:
        raise InvalidArgumentError("need at least 6 U values")
    values = [delta_diff_sq_sum(T, U, divisor_table).moment for U in U_values]
    return _fit("delta", T, U_values, values, 3, C3_REFERENCE)


def _uniform_simpson(func, a, b, step):
    """Composite Simpson on [a, b] with spacing <= step (even panel count)."""
    m = max(2, int(math.ceil((b - a) / step)))
    m += m % 2
    t = np.linspace(a, b, m + 1)
    v = func(t)
    return float(integrate.simpson(v, x=t))


def _curve_step(curve):
    return float(curve.t_grid[1] - curve.t_grid[0])


def e_diff_sq_integral(T, U, e_curve, step=None):
    """int_T^{2T} (E(t+U) - E(t))^2 dt through the interpolated curve."""
    start = time.perf_counter()
    if U < 0:
        raise InvalidArgumentError("U must be >= 0")
    if not e_curve.covers(T, 2 * T + U):
        raise OutOfRangeError(f"E curve does not cover [{T}, {2 * T + U}]")
    if U == 0:
        return _report("E", T, 0, 2, 0.0, 0.0, start)
    h = step or _curve_step(e_curve)
    moment = _uniform_simpson(lambda t: (e_curve(t + U) - e_curve(t)) ** 2, T, 2 * T, h)
    main = T * U * log_ratio(T, U) ** 3
    return _report("E", T, U, 2, moment, main, start)


class JutilaCheck(NamedTuple):
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs else float("nan")


def jutila_inner_integral(n, U, a, b, form="exp", panels=32, order=16):
    """int_a^b x^(1/2) |exp(2 pi i U sqrt(n/x)) - 1|^2 dx for each n.

    ``form="sin"`` evaluates the equal integrand 4 x^(1/2) sin^2(pi U sqrt(n/x)).
    """
    n = np.atleast_1d(np.asarray(n, dtype=np.float64))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    phase = np.sqrt(n[:, None] / x[None, :])
    if form == "exp":
        integrand = np.abs(np.exp(2j * math.pi * U * phase) - 1) ** 2
    elif form == "sin":
        integrand = 4 * np.sin(math.pi * U * phase) ** 2
    else:
        raise InvalidArgumentError(f"unknown form {form!r}")
    return (integrand * np.sqrt(x)[None, :]) @ w


def jutila_identity_check(T, H, U, divisor_table, cutoff_factor=1.0):
    """Both sides of Jutila's mean-square formula over [T, T + H].

    lhs: half-integer midpoint rule for int (Delta(x+U) - Delta(x))^2.
    rhs: (1/4pi^2) sum_{n <= T/(2U)} d(n)^2 n^(-3/2) * inner integral.
    ``cutoff_factor`` scales the n cutoff for diagnostics only.
    """
    _check_kind(divisor_table, Kind.DIVISOR)
    T, H, U = _require_int("T", T), _require_int("H", H), _require_int("U", U)
    if T + H + U > divisor_table.limit:
        raise OutOfRangeError("T + H + U beyond table limit")
    if U == 0:
        return JutilaCheck(0.0, 0.0)
    mids = np.arange(T, T + H, dtype=np.float64) + 0.5
    lhs = _chunked_power_sum(mids, lambda x: delta_difference(x, U, divisor_table), 2)
    n_max = int(cutoff_factor * T / (2 * U))
    if n_max > divisor_table.limit:
        raise OutOfRangeError("series cutoff beyond table limit")
    rhs = 0.0
    d = divisor_table.values
    for lo in range(1, n_max + 1, 512):
        n = np.arange(lo, min(n_max, lo + 511) + 1)
        inner = jutila_inner_integral(n, U, T, T + H)
        rhs += float(np.sum(d[n].astype(np.float64) ** 2 * n ** -1.5 * inner))
    return JutilaCheck(lhs, rhs / (4 * math.pi**2))


def circle_diff_sq_integral(T, U, r_table):
    """Half-integer sum of (P(t+U) - P(t))^2 over [T, 2T]."""
    start = time.perf_counter()
    _check_kind(r_table, Kind.TWO_SQUARES)
    T, U = _require_int("T", T), _require_int("U", U)
    if 2 * T + U > r_table.limit:
        raise OutOfRangeError("2T + U beyond table limit")
    if U == 0:
        return _report("circle", T, 0, 2, 0.0, 0.0, start)
    mids = np.arange(T, 2 * T, dtype=np.float64) + 0.5
    moment = _chunked_power_sum(mids, lambda x: circle_difference(x, U, r_table), 2)
    main = T * U * log_ratio(T, U)
    return _report("circle", T, U, 2, moment, main, start)


def circle_moment_fit(T, U_values, r_table):
    """Fit moment/(T U) = A1 lambda + A2; A1 must come out positive."""
    values = [circle_diff_sq_integral(T, U, r_table).moment for U in U_values]
    fit = _fit("circle", T, U_values, values, 1, None)
    if fit.coeffs[1] <= 0:
        raise FitFailureError("fitted A1 is not positive", {"coeffs": fit.coeffs})
    return fit


def cusp_diff_sq_integral(T, U, tau_table):
    """Half-integer sum of (A(t+U) - A(t))^2; ratio is moment / (T^12 U)."""
    start = time.perf_counter()
    _check_kind(tau_table, Kind.RAMANUJAN_TAU)
    T, U = _require_int("T", T), _require_int("U", U)
    if 2 * T + U > tau_table.limit:
        raise OutOfRangeError("2T + U beyond table limit")
    if U == 0:
        return _report("cusp", T, 0, 2, 0.0, 0.0, start)
    mids = np.arange(T, 2 * T, dtype=np.float64) + 0.5
    moment = _chunked_power_sum(mids, lambda x: cusp_difference(x, U, tau_table), 2)
    main = float(T) ** 12 * U
    return _report("cusp", T, U, 2, moment, main, start)


def _symmetric_difference(kind, table, curve, G):
    kind = str(kind).lower()
    if kind in ("delta", "d"):
        return lambda t: delta_difference(t - G, 2 * G, table)
    if kind == "e":
        return lambda t: curve(t + G) - curve(t - G)
    raise InvalidArgumentError(f"kind must be 'delta' or 'E', got {kind!r}")


def fourth_moment_probe(kind, T, G, divisor_table=None, e_curve=None, step=None):
    """int_T^{2T} (f(t+G) - f(t-G))^4 dt; ratio is against T G^2."""
    start = time.perf_counter()
    label = "delta" if str(kind).lower() in ("delta", "d") else "E"
    if G < 0:
        raise InvalidArgumentError("G must be >= 0")
    if label == "delta":
        T, G = _require_int("T", T), _require_int("G", G)
        if divisor_table is None or 2 * T + G > divisor_table.limit or T - G < 1:
            raise OutOfRangeError("divisor table does not cover [T - G, 2T + G]")
    elif e_curve is None or not e_curve.covers(T - G, 2 * T + G):
        raise OutOfRangeError("E curve does not cover [T - G, 2T + G]")
    if 0 < G and not (T**0.375 <= G <= T**0.5):
        warnings.warn(f"G={G} outside [T^(3/8), T^(1/2)]", stacklevel=2)
    if G == 0:
        return _report(label, T, 0, 4, 0.0, 0.0, start)
    f = _symmetric_difference(label, divisor_table, e_curve, G)
    if label == "delta":
        mids = np.arange(T, 2 * T, dtype=np.float64) + 0.5
        moment = _chunked_power_sum(mids, f, 4)
    else:
        moment = _uniform_simpson(lambda t: f(t) ** 4, T, 2 * T, step or _curve_step(e_curve))
    return _report(label, T, G, 4, moment, float(T) * G * G, start)


def omega_probe(kind, T, U, samples, seed=0, divisor_table=None, e_curve=None):
    """max over sampled x in [T, 2T] of |f(x+U) - f(x)| / (sqrt(U) log^1.5(sqrt(x)/U)).

    Samples are drawn in fixed blocks of 1000 so a larger sample count
    extends, never reshuffles, a smaller one under the same seed.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be positive")
    if U <= 0 or U >= math.sqrt(T):
        raise InvalidArgumentError("need 0 < U < sqrt(T)")
    label = "delta" if str(kind).lower() in ("delta", "d") else "E"
    rng = np.random.default_rng(seed)
    blocks = []
    remaining = samples
    while remaining > 0:
        size = min(1000, remaining)
        if label == "delta":
            blocks.append(rng.integers(int(T), int(2 * T), size=size) + 0.5)
        else:
            blocks.append(rng.uniform(T, 2 * T, size=size))
        remaining -= size
    x = np.concatenate(blocks)
    if label == "delta":
        if divisor_table is None or 2 * T + U > divisor_table.limit:
            raise OutOfRangeError("divisor table does not cover [T, 2T + U]")
        diff = delta_difference(x, U, divisor_table)
    else:
        if e_curve is None or not e_curve.covers(T, 2 * T + U):
            raise OutOfRangeError("E curve does not cover [T, 2T + U]")
        diff = e_curve(x + U) - e_curve(x)
    scale = math.sqrt(U) * np.log(np.sqrt(x) / U) ** 1.5
    return float(np.max(np.abs(diff) / scale))


_SINC_SPLIT = 200.0


def sinc_sq_integral(alpha, beta):
    """int_alpha^beta sin^2(y) / y^2 dy to ~1e-10 absolute.

    Below y = 200 the integrand is handled by adaptive Gauss-Kronrod; above
    it sin^2 y / y^2 = 1/(2y^2) - cos(2y)/(2y^2), where the first part is
    elementary and the second goes to the QAWF Fourier-integral rule.
    """
    if not (0 < alpha <= 1 <= beta):
        raise InvalidArgumentError("need 0 < alpha <= 1 <= beta")
    if alpha == beta:
        return 0.0

    def f(y):
        s = math.sin(y) / y
        return s * s

    mid = min(beta, _SINC_SPLIT)
    head, _ = integrate.quad(f, alpha, mid, epsabs=1e-13, epsrel=1e-13, limit=500)
    if beta <= _SINC_SPLIT:
        return head
    smooth = 0.5 * (1 / mid - 1 / beta)
    # a finite QAWO interval would span ~beta/pi periods; the Fourier rule
    # on [c, inf) does not care, so take the tail as a difference of two
    osc = _cos_tail(mid) - (_cos_tail(beta) if math.isfinite(beta) else 0.0)
    return head + smooth - 0.5 * osc


def _cos_tail(c):
    """int_c^inf cos(2y) / y^2 dy by QAWF."""
    val, _ = integrate.quad(lambda y: 1 / (y * y), c, np.inf, weight="cos", wvar=2.0,
                            epsabs=1e-14, limlst=200)
    return val

"""|zeta(1/2 + it)|^2, the mean-square main term, and the error function E(T).

Riemann-Siegel is used for t >= small_t_cutoff and Euler-Maclaurin below it.
E(T) is built by cumulative Gauss-Legendre panels from t = 0.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _kernels
from .error_terms import EULER_GAMMA, delta_star
from .errors import InvalidArgumentError, OutOfRangeError, QuadratureFailureError

MAX_T = 1e6
GL_ORDER = 8
MAX_PANEL = 0.25
_EM_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
                 Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6),
                 Fraction(-3617, 510), Fraction(43867, 798), Fraction(-174611, 330)]


@dataclass(frozen=True)
class QuadratureConfig:
    step: float = 0.25
    tolerance: float = 1e-7
    rs_correction_order: int = 2
    small_t_cutoff: float = 100.0

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidArgumentError("step must be positive")
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be positive")
        if self.rs_correction_order not in (0, 1, 2):
            raise InvalidArgumentError("rs_correction_order must be 0, 1 or 2")
        if self.small_t_cutoff < 2:
            raise InvalidArgumentError("small_t_cutoff must be >= 2")

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


DEFAULT_CONFIG = QuadratureConfig()


# --- Riemann-Siegel correction terms -------------------------------------
#
# Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p) is entire. With
# q = p - 1/2 it equals -cos(2 pi q^2 - 5 pi / 8) / cos(2 pi q); its Taylor
# series in q is computed once in high precision and the needed
# derivatives are read off it.

_PSI_DEGREE = 60


def _psi_taylor(degree):
    with mpmath.workdps(60):
        two_pi = 2 * mpmath.pi
        c, s = mpmath.cos(5 * mpmath.pi / 8), mpmath.sin(5 * mpmath.pi / 8)
        num = [mpmath.mpf(0)] * (degree + 1)
        den = [mpmath.mpf(0)] * (degree + 1)
        # cos(a q^2) c + sin(a q^2) s with a = 2 pi
        for j in range(0, degree // 2 + 1):
            term = two_pi**j / mpmath.factorial(j)
            if j % 2 == 0:
                num[2 * j] += term * c * (1 if j % 4 == 0 else -1)
            else:
                num[2 * j] += term * s * (1 if j % 4 == 1 else -1)
        for j in range(0, degree + 1, 2):
            den[j] = (-1) ** (j // 2) * two_pi**j / mpmath.factorial(j)
        # Psi = -num / den
        out = [mpmath.mpf(0)] * (degree + 1)
        for k in range(degree + 1):
            acc = -num[k]
            for i in range(1, k + 1):
                acc -= den[i] * out[k - i]
            out[k] = acc / den[0]
        return out


def _derivative_poly(coeffs, order):
    """Taylor coefficients (ascending in q) of the order-th derivative."""
    return [coeffs[m] * mpmath.ff(m, order) for m in range(order, len(coeffs))]


def _build_correction_polys():
    psi = _psi_taylor(_PSI_DEGREE)
    pi = mpmath.pi

    def poly(*parts):
        n = max(len(p) for p, _ in parts)
        out = [mpmath.mpf(0)] * n
        for p, w in parts:
            for i, v in enumerate(p):
                out[i] += w * v
        return np.array([float(v) for v in out])

    with mpmath.workdps(60):
        c0 = poly((psi, 1))
        c1 = poly((_derivative_poly(psi, 3), -1 / (96 * pi**2)))
        c2 = poly((_derivative_poly(psi, 2), 1 / (64 * pi**2)),
                  (_derivative_poly(psi, 6), 1 / (18432 * pi**4)))
    return (c0, c1, c2)


_CORRECTIONS = _build_correction_polys()


def rs_correction(p, order):
    """C_0 .. C_order evaluated at the fractional part p."""
    q = np.asarray(p, dtype=np.float64) - 0.5
    return [np.polynomial.polynomial.polyval(q, c) for c in _CORRECTIONS[:order + 1]]


def theta(t):
    """Riemann-Siegel theta by its asymptotic expansion (t large)."""
    t = np.asarray(t, dtype=np.float64)
    return (t / 2 * np.log(t / (2 * math.pi)) - t / 2 - math.pi / 8
            + 1 / (48 * t) + 7 / (5760 * t**3) + 31 / (80640 * t**5)
            + 127 / (430080 * t**7))


def z_function(t, order=2):
    """Hardy's Z(t) by Riemann-Siegel; accurate for t >~ 50."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    a = np.sqrt(t / (2 * math.pi))
    n_terms = np.floor(a).astype(np.int64)
    nmax = int(n_terms.max()) if n_terms.size else 0
    n = np.arange(1, nmax + 1, dtype=np.float64)
    main = _kernels.rs_main_sum(t, n_terms, theta(t), np.log(n), 1 / np.sqrt(n))
    p = a - n_terms
    corr = rs_correction(p, order)
    inv = 1 / a
    rem = np.zeros_like(t)
    for k, c in enumerate(corr):
        rem += c * inv**k
    sign = np.where(n_terms % 2 == 1, 1.0, -1.0)  # (-1)^(N-1)
    return 2 * main + sign * rem / np.sqrt(a)


def zeta_half_em(t, terms=None):
    """zeta(1/2 + it) by Euler-Maclaurin, vectorized; intended for t <~ 500."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    s = 0.5 + 1j * t
    n_sum = int(terms) if terms is not None else int(max(20, math.ceil(float(t.max()) if t.size else 0) + 20))
    n = np.arange(1, n_sum, dtype=np.float64)
    total = np.exp(-np.outer(s, np.log(n))).sum(axis=1) if n.size else np.zeros_like(s)
    N = float(n_sum)
    logn = math.log(N)
    total = total + np.exp((1 - s) * logn) / (s - 1) + 0.5 * np.exp(-s * logn)
    rising = s.copy()  # s (s+1) ... (s+2k-2)
    fact = 2.0
    for k, b in enumerate(_EM_BERNOULLI, start=1):
        total = total + float(b) / fact * rising * np.exp(-(s + 2 * k - 1) * logn)
        rising = rising * (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
    return total


def zeta_half_sq(t, config=DEFAULT_CONFIG):
    """|zeta(1/2 + it)|^2 for t >= 0 (scalar or array)."""
    ta = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(ta < 0):
        raise InvalidArgumentError("t must be >= 0")
    if np.any(ta > MAX_T):
        raise OutOfRangeError(f"t beyond supported maximum {MAX_T}")
    out = np.empty_like(ta)
    small = ta < config.small_t_cutoff
    if np.any(small):
        out[small] = np.abs(zeta_half_em(ta[small])) ** 2
    if np.any(~small):
        out[~small] = z_function(ta[~small], config.rs_correction_order) ** 2
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def mean_square_main(T):
    """T (log(T / 2 pi) + 2 gamma - 1), zero at T = 0."""
    T = np.asarray(T, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(T > 0, T * (np.log(T / (2 * math.pi)) + 2 * EULER_GAMMA - 1), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ECurve:
    t_grid: np.ndarray
    e_values: np.ndarray
    config: QuadratureConfig

    def __post_init__(self):
        if self.t_grid.shape != self.e_values.shape or self.t_grid.ndim != 1:
            raise InvalidArgumentError("t_grid and e_values must be equal-length vectors")
        if np.any(np.diff(self.t_grid) <= 0):
            raise InvalidArgumentError("t_grid must be strictly ascending")
        self.t_grid.setflags(write=False)
        self.e_values.setflags(write=False)
        object.__setattr__(self, "_interp", PchipInterpolator(self.t_grid, self.e_values))

    @property
    def t_min(self):
        return float(self.t_grid[0])

    @property
    def t_max(self):
        return float(self.t_grid[-1])

    def covers(self, lo, hi):
        return self.t_min <= lo and hi <= self.t_max

    def __call__(self, t):
        ta = np.asarray(t, dtype=np.float64)
        if np.any(ta < self.t_min) or np.any(ta > self.t_max):
            raise OutOfRangeError(f"t outside curve range [{self.t_min}, {self.t_max}]")
        out = self._interp(ta)
        return float(out) if np.ndim(t) == 0 else out


def _panel_edges(t_min, t_max, width):
    """Panel edges from 0 with an edge exactly at t_min and t_max."""
    head = max(1, math.ceil(t_min / width)) if t_min > 0 else 0
    body = max(1, math.ceil((t_max - t_min) / width))
    left = np.linspace(0.0, t_min, head + 1) if head else np.array([0.0])
    right = np.linspace(t_min, t_max, body + 1)
    return np.concatenate([left[:-1], right]), head


def _cumulative_integral(edges, config, chunk=1 << 16):
    nodes, weights = np.polynomial.legendre.leggauss(GL_ORDER)
    a, b = edges[:-1], edges[1:]
    half = (b - a) / 2
    mid = (a + b) / 2
    panel = np.empty(a.shape[0])
    for start in range(0, a.shape[0], chunk):
        sl = slice(start, start + chunk)
        pts = mid[sl, None] + half[sl, None] * nodes[None, :]
        vals = zeta_half_sq(pts.ravel(), config).reshape(pts.shape)
        panel[sl] = half[sl] * (vals @ weights)
    # extended-precision running sum keeps the prefix error near 1e-12
    cum = np.concatenate([[0.0], np.cumsum(panel.astype(np.longdouble)).astype(np.float64)])
    return cum


def _raw_e_curve(t_min, t_max, width, config):
    edges, head = _panel_edges(t_min, t_max, width)
    cum = _cumulative_integral(edges, config)
    grid = edges[head:]
    return grid, cum[head:] - mean_square_main(grid)


def build_e_curve(t_min, t_max, config=DEFAULT_CONFIG, check=True):
    """E(t) on [t_min, t_max] on a grid of spacing <= min(step, 0.25).

    With ``check`` the whole integral is redone at half the panel width and
    the two curves must agree to max(1e-3, tolerance * (t_max - t_min)).
    """
    t_min, t_max = float(t_min), float(t_max)
    if not 0 <= t_min < t_max:
        raise InvalidArgumentError("need 0 <= t_min < t_max")
    if t_max > MAX_T:
        raise OutOfRangeError(f"t_max beyond supported maximum {MAX_T}")
    width = min(config.step, MAX_PANEL)
    grid, e = _raw_e_curve(t_min, t_max, width, config)
    if check:
        fine_grid, fine_e = _raw_e_curve(t_min, t_max, width / 2, config)
        # fine grid contains every coarse point at even offsets of the body
        coarse_on_fine = np.interp(grid, fine_grid, fine_e)
        disc = float(np.max(np.abs(coarse_on_fine - e)))
        allowed = max(1e-3, config.tolerance * (t_max - t_min))
        if disc > allowed:
            raise QuadratureFailureError(
                f"half-step discrepancy {disc:.3g} exceeds {allowed:.3g}", disc)
    return ECurve(grid, e, config)


def half_step_discrepancy(t_min, t_max, config=DEFAULT_CONFIG):
    """Max |E_h - E_{h/2}| over the coarse grid (no threshold applied)."""
    width = min(config.step, MAX_PANEL)
    grid, e = _raw_e_curve(t_min, t_max, width, config)
    fine_grid, fine_e = _raw_e_curve(t_min, t_max, width / 2, config)
    return float(np.max(np.abs(np.interp(grid, fine_grid, fine_e) - e)))


def e_star(t, e_curve, divisor_table):
    """E(t) - 2 pi Delta*(t / 2 pi) using the interpolated curve."""
    ta = np.asarray(t, dtype=np.float64)
    if np.any(ta < e_curve.t_min) or np.any(ta > e_curve.t_max):
        raise OutOfRangeError("t outside the E curve")
    ds = delta_star(ta / (2 * math.pi), divisor_table).combination
    out = e_curve(ta) - 2 * math.pi * np.asarray(ds)
    return float(out) if np.ndim(t) == 0 else out


def local_bound_constants(ts, k=2, config=DEFAULT_CONFIG, points=64):
    """|zeta|^k / (log t (int_{t-1}^{t+1} |zeta|^k + 1)) at each t."""
    nodes, weights = np.polynomial.legendre.leggauss(points)
    out = []
    for t in np.atleast_1d(ts):
        vals = zeta_half_sq(t + nodes, config) ** (k / 2)
        integral = float(vals @ weights)
        out.append(zeta_half_sq(t, config) ** (k / 2) / (math.log(t) * (integral + 1)))
    return np.array(out)


# --- CSV cache ------------------------------------------------------------

def e_curve_cache_path(cache_dir, t_min, t_max, config):
    name = f"ecurve-{t_min:.17g}-{t_max:.17g}-{config.digest()}.csv"
    return Path(cache_dir) / name


def save_e_curve(curve, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "e_value"])
        for t, e in zip(curve.t_grid, curve.e_values):
            w.writerow([f"{t:.17g}", f"{e:.17g}"])
    os.replace(tmp, path)


def load_e_curve(path, config=DEFAULT_CONFIG):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "e_value"]:
        raise InvalidArgumentError(f"{path} is not an E-curve CSV")
    data = np.array(rows[1:], dtype=np.float64)
    return ECurve(data[:, 0].copy(), data[:, 1].copy(), config)


def cached_e_curve(t_min, t_max, config=DEFAULT_CONFIG, cache_dir=None, check=True):
    """build_e_curve with a CSV cache keyed by range and config digest."""
    if cache_dir is None:
        return build_e_curve(t_min, t_max, config, check)
    path = e_curve_cache_path(cache_dir, t_min, t_max, config)
    if path.exists():
        try:
            return load_e_curve(path, config)
        except (InvalidArgumentError, ValueError):
            pass
    curve = build_e_curve(t_min, t_max, config, check)
    save_e_curve(curve, path)
    return curve

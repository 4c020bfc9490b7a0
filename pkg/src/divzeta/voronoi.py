"""Truncated Voronoi-type series for Delta, Delta*, P and A.

Every series has the shape

    prefactor(x) * sum_{n<=N} w(n) c(n) n^(-a) cos(2 pi (f sqrt(n x) + phase))

with f in {1, 2}. The phase f*sqrt(nx) is carried as a double-double so its
reduction modulo 1 is exact; a plain double would lose ~1e-10 rad at
sqrt(nx) ~ 1e5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith_tables import Kind
from .error_terms import ErrorTermKind, evaluate
from .errors import InvalidArgumentError, OutOfRangeError

MAX_TERMS = 10**7
CUSP_WEIGHT = 12
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class VoronoiParams:
    kind: ErrorTermKind
    x: float
    n_terms: int

    def __post_init__(self):
        if self.n_terms < 0 or self.n_terms > MAX_TERMS:
            raise InvalidArgumentError(f"n_terms must be in [0, {MAX_TERMS}]")
        if self.x <= 0:
            raise InvalidArgumentError("x must be positive")


@dataclass(frozen=True)
class _SeriesShape:
    sign: float
    scale: float          # constant in front of x^power
    power: float          # x exponent of the prefactor
    decay: float          # n exponent a in n^(-a)
    freq: int             # f in cos(2 pi (f sqrt(nx) + phase))
    phase: float
    alternating: bool
    table_kind: Kind


_SQRT2_PI = 1.0 / (math.pi * math.sqrt(2.0))

# tau(n) ~ n^((k-1)/2) d(n), so A(x) is x^((k-1)/2) times a Delta-sized
# quantity: the prefactor is x^(k/2 - 1/4), matching the x^(k/2) N^(-1/2)
# truncation error.
SHAPES = {
    ErrorTermKind.DIRICHLET_DELTA:
        _SeriesShape(1.0, _SQRT2_PI, 0.25, 0.75, 2, -0.125, False, Kind.DIVISOR),
    ErrorTermKind.ALTERNATING_DELTA_STAR:
        _SeriesShape(1.0, _SQRT2_PI, 0.25, 0.75, 2, -0.125, True, Kind.DIVISOR),
    ErrorTermKind.CIRCLE_P:
        _SeriesShape(-1.0, 1.0 / math.pi, 0.25, 0.75, 1, 0.125, False, Kind.TWO_SQUARES),
    ErrorTermKind.CUSP_A:
        _SeriesShape(1.0, _SQRT2_PI, CUSP_WEIGHT / 2 - 0.25, CUSP_WEIGHT / 2 + 0.25,
                     2, -0.125, False, Kind.RAMANUJAN_TAU),
}


def _two_prod(a, b):
    """Exact a*b = hi + lo by Veltkamp splitting."""
    hi = a * b
    split = 134217729.0  # 2^27 + 1
    ca = split * a
    ah = ca - (ca - a)
    al = a - ah
    cb = split * b
    bh = cb - (cb - b)
    bl = b - bh
    lo = ((ah * bh - hi) + ah * bl + al * bh) + al * bl
    return hi, lo


def reduced_phase(n, x, freq, phase):
    """frac(freq * sqrt(n x) + phase), shape broadcast of n and x.

    sqrt is refined by one Newton step against the exact product n*x.
    """
    n = np.asarray(n, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m_hi, m_lo = _two_prod(n, x)
    s0 = np.sqrt(m_hi)
    sq_hi, sq_lo = _two_prod(s0, s0)
    resid = (m_hi - sq_hi) + (m_lo - sq_lo)
    ds = resid / (2.0 * s0)
    base = freq * s0
    frac = base - np.floor(base)
    u = frac + (freq * ds + phase)
    return u - np.floor(u)


def _coefficients(shape, table, n_terms):
    if n_terms > table.limit:
        raise OutOfRangeError(f"N={n_terms} exceeds table limit {table.limit}")
    vals = table.values[1:n_terms + 1]
    if vals.dtype == object:
        vals = np.array([float(v) for v in vals])
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    c = vals.astype(np.float64) * n ** (-shape.decay)
    if shape.alternating:
        c[0::2] = -c[0::2]
    return n, c


def terms(kind, x, n, table):
    """Individual series terms (prefactor included) at scalar x for indices n."""
    kind = ErrorTermKind.parse(kind)
    shape = SHAPES[kind]
    n = np.asarray(n, dtype=np.int64)
    _, c = _coefficients(shape, table, int(n.max()))
    c = c[n - 1]
    u = reduced_phase(n, x, shape.freq, shape.phase)
    pref = shape.sign * shape.scale * float(x) ** shape.power
    return pref * c * np.cos(2 * math.pi * u)


def series(kind, x, n_terms, table):
    """Truncated series at x (scalar or array) with N = n_terms terms.

    Terms are added in ascending n; block partial sums are combined with
    Neumaier compensation so results are reproducible bit for bit.
    """
    kind = ErrorTermKind.parse(kind)
    shape = SHAPES[kind]
    if table.kind is not shape.table_kind:
        raise InvalidArgumentError(f"{kind.name} needs a {shape.table_kind.name} table")
    n_terms = int(n_terms)
    VoronoiParams(kind, float(np.min(x)) if np.size(x) else 1.0, n_terms)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    total = np.zeros(xs.shape[0])
    comp = np.zeros(xs.shape[0])
    if n_terms > 0:
        n, c = _coefficients(shape, table, n_terms)
        block = max(1, _BLOCK_ELEMENTS // xs.shape[0])
        for start in range(0, n_terms, block):
            nb = n[start:start + block]
            u = reduced_phase(nb[None, :], xs[:, None], shape.freq, shape.phase)
            part = np.cos(2 * math.pi * u) @ c[start:start + block]
            t = total + part
            comp += np.where(np.abs(total) >= np.abs(part),
                             (total - t) + part, (part - t) + total)
            total = t
    out = shape.sign * shape.scale * xs ** shape.power * (total + comp)
    if np.ndim(x) == 0:
        return float(out[0])
    return out


def voronoi_delta(x, n_terms, divisor_table):
    return series(ErrorTermKind.DIRICHLET_DELTA, x, n_terms, divisor_table)


def voronoi_delta_star(x, n_terms, divisor_table):
    return series(ErrorTermKind.ALTERNATING_DELTA_STAR, x, n_terms, divisor_table)


def voronoi_circle(x, n_terms, r_table):
    return series(ErrorTermKind.CIRCLE_P, x, n_terms, r_table)


def voronoi_cusp(x, n_terms, tau_table):
    return series(ErrorTermKind.CUSP_A, x, n_terms, tau_table)


def default_terms(x):
    """Default truncation floor(x^(2/3)) used by cross-validation sweeps.

    The float estimate is corrected exactly: N is the largest integer with
    N^3 <= x^2.
    """
    sq = Fraction(float(x)) ** 2
    n = int(round(float(x) ** (2.0 / 3.0)))
    while n > 0 and n**3 > sq:
        n -= 1
    while (n + 1) ** 3 <= sq:
        n += 1
    return n


def half_integer_samples(lo, hi, count, seed):
    """Reproducible half-integer points m + 1/2 with lo <= m < hi."""
    rng = np.random.default_rng(seed)
    return rng.integers(int(lo), int(hi), size=count).astype(np.float64) + 0.5


@dataclass(frozen=True)
class TruncationStudy:
    kind: ErrorTermKind
    n_values: tuple
    rms_errors: tuple
    slope: float
    samples: int
    x_range: tuple
    seed: int


def truncation_study(kind, table, n_values, samples=1000, x_range=(1e5, 2e5), seed=0):
    """RMS of (series - exact) over random half-integers for each N.

    ``slope`` is the least-squares slope of log RMS against log N.
    """
    kind = ErrorTermKind.parse(kind)
    n_values = tuple(int(n) for n in n_values)
    x = half_integer_samples(x_range[0], x_range[1], samples, seed)
    if kind is ErrorTermKind.ALTERNATING_DELTA_STAR:
        exact = np.asarray(evaluate(kind, x, table))
    else:
        exact = np.asarray(evaluate(kind, x, table), dtype=np.float64)
    rms = []
    for N in n_values:
        err = series(kind, x, N, table) - exact
        rms.append(float(np.sqrt(np.mean(err * err))))
    slope = float(np.polyfit(np.log(n_values), np.log(rms), 1)[0]) if len(n_values) > 1 else float("nan")
    return TruncationStudy(kind, n_values, tuple(rms), slope, samples,
                           (float(x_range[0]), float(x_range[1])), seed)

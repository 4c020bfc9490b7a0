"""Sieved tables of d(n), r(n) and tau(n) and fits of their square sums.

Tables are 1-indexed: ``table.values[n]`` is the value at ``n`` and
``values[0]`` is a zero placeholder. Divisor and two-squares tables hold
``int64``; tau values outgrow 64 bits near n = 2000, so tau tables hold
exact Python integers in an object array.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import (FitFailureError, InvalidArgumentError, OutOfRangeError,
                     ResourceLimitError)

# Two int64 arrays (values and prefix sums) per entry; ~1.6 GB at the cap.
MAX_SIEVE_LIMIT = 10**8
MAX_TAU_LIMIT = 200_000
FIT_CONDITION_LIMIT = 1e10

# Reference constants for the square sums.
D2_LEADING = 1.0 / math.pi**2
R2_LOG_COEFF = 4.0
R2_CONSTANT = 8.0665


class Kind(enum.Enum):
    DIVISOR = 0
    TWO_SQUARES = 1
    RAMANUJAN_TAU = 2

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        aliases = {"d": cls.DIVISOR, "divisor": cls.DIVISOR,
                   "r": cls.TWO_SQUARES, "two_squares": cls.TWO_SQUARES,
                   "twosquares": cls.TWO_SQUARES,
                   "tau": cls.RAMANUJAN_TAU, "ramanujan_tau": cls.RAMANUJAN_TAU,
                   "ramanujantau": cls.RAMANUJAN_TAU}
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise InvalidArgumentError(f"unknown table kind {name!r}") from None


@dataclass(frozen=True, eq=False)
class ArithTable:
    kind: Kind
    limit: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != (self.limit + 1,):
            raise InvalidArgumentError("values must have length limit + 1")
        self.values.setflags(write=False)

    def __getitem__(self, n):
        return self.values[n]

    @property
    def exact(self):
        """True when values are Python integers (tau)."""
        return self.values.dtype == object

    @cached_property
    def prefix(self):
        """prefix[n] = sum_{m<=n} values[m]."""
        p = np.cumsum(self.values)
        p.setflags(write=False)
        return p

    @cached_property
    def alternating_prefix(self):
        """prefix of (-1)^n values[n]."""
        signed = self.values.copy()
        signed[1::2] = -signed[1::2]
        p = np.cumsum(signed)
        p.setflags(write=False)
        return p

    @cached_property
    def square_prefix(self):
        if self.exact:
            p = np.cumsum(self.values * self.values)
        else:
            # d(n)^2, r(n)^2 < 10^7 below the sieve cap, so sums stay < 2^63.
            p = np.cumsum(self.values * self.values)
        p.setflags(write=False)
        return p

    def as_float(self):
        return self.values.astype(np.float64)

    def equals(self, other):
        return (self.kind == other.kind and self.limit == other.limit
                and bool(np.array_equal(self.values, other.values)))


def _tau_values(limit):
    exps, signs = _kernels.pentagonal_series(limit)
    residues = [_kernels.power_series_power_mod(limit, exps, signs, 24, q)
                for q in _kernels.TAU_MODULI]
    modulus = math.prod(_kernels.TAU_MODULI)
    acc = np.zeros(limit, dtype=object)
    for q, r in zip(_kernels.TAU_MODULI, residues):
        m = modulus // q
        weight = m * pow(m, -1, q)
        acc = acc + r.astype(object) * weight
    acc = acc % modulus
    half = modulus // 2
    acc = np.where(acc > half, acc - modulus, acc)
    values = np.zeros(limit + 1, dtype=object)
    values[0] = 0
    values[1:] = acc  # tau(n) is the coefficient of x^(n-1) in prod (1-x^m)^24
    # CRT recovery is only unique while |tau(n)| < modulus / 2; the Deligne
    # bound is far below that here, so a violation means arithmetic went wrong.
    d = _kernels.divisor_sieve(limit)
    for n in range(1, limit + 1):
        if values[n] * values[n] > n**11 * int(d[n]) ** 2:
            raise ResourceLimitError(f"tau({n}) failed the Deligne bound check; "
                                     "coefficient overflow")
    return values


def build_table(kind, limit):
    """Sieve ``kind`` up to ``limit`` inclusive."""
    kind = Kind.parse(kind)
    limit = int(limit)
    if limit < 1:
        raise InvalidArgumentError(f"limit must be >= 1, got {limit}")
    if kind is Kind.RAMANUJAN_TAU:
        if limit > MAX_TAU_LIMIT:
            raise ResourceLimitError(
                f"tau table limit {limit} exceeds maximum {MAX_TAU_LIMIT}")
        return ArithTable(kind, limit, _tau_values(limit))
    if limit > MAX_SIEVE_LIMIT:
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds memory budget {MAX_SIEVE_LIMIT}")
    if kind is Kind.DIVISOR:
        values = _kernels.divisor_sieve(limit)
    else:
        values = _kernels.two_squares_sieve(limit)
    values[0] = 0
    return ArithTable(kind, limit, values)


def summatory_square(table, x):
    """Sum of values[n]**2 over n <= floor(x)."""
    if x < 1 or x >= table.limit + 1:
        raise OutOfRangeError(f"x={x} outside [1, {table.limit}]")
    return int(table.square_prefix[int(math.floor(x))])


@dataclass(frozen=True)
class SummatoryFit:
    kind: Kind
    degree: int
    leading_coeff: float
    reference_coeff: float | None
    relative_error: float | None
    coeffs: tuple  # ascending powers of log x
    sample_points: tuple  # (x, summatory value) pairs
    constant_reference: float | None = None
    constant_relative_error: float | None = None
    spread: float | None = None  # max/min of the normalized ratio (tau only)


def fit_polynomial_centered(u, y, degree):
    """Least squares y ~ sum_j c_j u^j via the centered variable u - mean(u).

    Returns ascending coefficients in the original variable and the
    condition number of the centered design matrix.
    """
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if u.shape[0] <= degree:
        raise FitFailureError("too few points for the requested degree",
                              {"points": int(u.shape[0]), "degree": degree})
    center = float(u.mean())
    v = u - center
    design = np.vander(v, degree + 1, increasing=True)
    cond = float(np.linalg.cond(design))
    if not np.isfinite(cond) or cond > FIT_CONDITION_LIMIT:
        raise FitFailureError("ill-conditioned fit",
                              {"condition": cond, "center": center})
    centered, *_ = np.linalg.lstsq(design, y, rcond=None)
    # sum_j b_j (u - c)^j  ->  sum_i a_i u^i
    coeffs = np.zeros(degree + 1)
    for j, b in enumerate(centered):
        for i in range(j + 1):
            coeffs[i] += b * math.comb(j, i) * (-center) ** (j - i)
    return coeffs, cond


def fit_summatory(kind, x_grid, table=None):
    """Fit the square sum of ``kind`` on ``x_grid`` to its asymptotic shape.

    d: S(x)/x against a cubic in log x, leading coefficient vs 1/pi^2.
    r: S(x)/x against b1 log x + b0, b1 vs 4 and b0 vs 8.0665.
    tau: S(x)/x^12 against a constant; no reference value exists.
    """
    kind = Kind.parse(kind)
    xs = np.unique(np.asarray(x_grid, dtype=np.float64))
    if xs.shape[0] < 6:
        raise InvalidArgumentError("x_grid needs at least 6 distinct points")
    if xs[0] < 1:
        raise InvalidArgumentError("x_grid points must be >= 1")
    top = int(math.floor(xs[-1]))
    if table is None:
        table = build_table(kind, top)
    elif table.kind is not kind:
        raise InvalidArgumentError("table kind does not match")
    sums = [summatory_square(table, x) for x in xs]
    samples = tuple(zip(xs.tolist(), sums))
    logs = np.log(xs)

    if kind is Kind.RAMANUJAN_TAU:
        ratios = np.array([float(s) / x**12 for x, s in samples])
        coeffs, _ = fit_polynomial_centered(logs, ratios, 0)
        return SummatoryFit(kind, 0, float(coeffs[0]), None, None,
                            tuple(coeffs.tolist()), samples,
                            spread=float(ratios.max() / ratios.min()))

    y = np.array([float(s) / x for x, s in samples])
    if kind is Kind.DIVISOR:
        coeffs, _ = fit_polynomial_centered(logs, y, 3)
        lead = float(coeffs[3])
        return SummatoryFit(kind, 3, lead, D2_LEADING,
                            abs(lead - D2_LEADING) / D2_LEADING,
                            tuple(coeffs.tolist()), samples)
    coeffs, _ = fit_polynomial_centered(logs, y, 1)
    lead = float(coeffs[1])
    const = float(coeffs[0])
    return SummatoryFit(kind, 1, lead, R2_LOG_COEFF,
                        abs(lead - R2_LOG_COEFF) / R2_LOG_COEFF,
                        tuple(coeffs.tolist()), samples,
                        constant_reference=R2_CONSTANT,
                        constant_relative_error=abs(const - R2_CONSTANT) / R2_CONSTANT)

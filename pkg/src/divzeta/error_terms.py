"""Exact error terms of the divisor, circle and cusp-form problems.

Sums over n <= x give full weight to n = x. Main terms are evaluated in
extended precision so the subtraction keeps ~1e-12 absolute accuracy even
where the main term is ~1e8.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .arith_tables import Kind
from .errors import InvalidArgumentError, OutOfRangeError

EULER_GAMMA = 0.5772156649015329

_LD = np.longdouble
_GAMMA_LD = _LD("0.57721566490153286060651209008240243")
_PI_LD = _LD("3.14159265358979323846264338327950288")


class MainTermForm(enum.Enum):
    DIVISOR = "x(log x + 2gamma - 1)"
    CIRCLE = "pi x"
    ZERO = "0"


@dataclass(frozen=True)
class MainTermSpec:
    form: MainTermForm
    gamma: float = EULER_GAMMA

    def __call__(self, x):
        x = np.asarray(x, dtype=_LD)
        if self.form is MainTermForm.DIVISOR:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(x > 0, x * (np.log(x) + 2 * _GAMMA_LD - 1), _LD(0))
            return out
        if self.form is MainTermForm.CIRCLE:
            return _PI_LD * x
        return np.zeros_like(x)


class ErrorTermKind(enum.Enum):
    DIRICHLET_DELTA = "delta"
    ALTERNATING_DELTA_STAR = "delta_star"
    CIRCLE_P = "circle"
    CUSP_A = "cusp"

    @property
    def main_term(self):
        if self is ErrorTermKind.CIRCLE_P:
            return MainTermSpec(MainTermForm.CIRCLE)
        if self is ErrorTermKind.CUSP_A:
            return MainTermSpec(MainTermForm.ZERO)
        return MainTermSpec(MainTermForm.DIVISOR)

    @property
    def table_kind(self):
        return {ErrorTermKind.CIRCLE_P: Kind.TWO_SQUARES,
                ErrorTermKind.CUSP_A: Kind.RAMANUJAN_TAU}.get(self, Kind.DIVISOR)

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        aliases = {"delta": cls.DIRICHLET_DELTA, "d": cls.DIRICHLET_DELTA,
                   "delta_star": cls.ALTERNATING_DELTA_STAR,
                   "deltastar": cls.ALTERNATING_DELTA_STAR,
                   "circle": cls.CIRCLE_P, "p": cls.CIRCLE_P, "r": cls.CIRCLE_P,
                   "cusp": cls.CUSP_A, "a": cls.CUSP_A, "tau": cls.CUSP_A}
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise InvalidArgumentError(f"unknown error term {name!r}") from None


_DIVISOR_MAIN = MainTermSpec(MainTermForm.DIVISOR)


def _check_table(table, kind):
    if table.kind is not kind:
        raise InvalidArgumentError(f"expected a {kind.name} table, got {table.kind.name}")


def _floor_index(x, limit, lower=0.0):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < lower) or np.any(x >= limit + 1):
        raise OutOfRangeError(f"x outside [{lower}, {limit}] for this table")
    return np.floor(x).astype(np.int64)


def _scalar_or_array(out, x):
    if np.ndim(x) == 0:
        return out.item() if hasattr(out, "item") else out
    return out


def divisor_main_term(x):
    return _DIVISOR_MAIN(x)


def delta(x, divisor_table):
    """Dirichlet divisor error term, scalar or vectorized over x >= 1."""
    _check_table(divisor_table, Kind.DIVISOR)
    idx = _floor_index(x, divisor_table.limit, lower=1.0)
    partial = divisor_table.prefix[idx].astype(_LD)
    out = (partial - divisor_main_term(x)).astype(np.float64)
    return _scalar_or_array(out, x)


def delta_difference(x, U, divisor_table):
    """Delta(x + U) - Delta(x) without cancelling two large main terms."""
    _check_table(divisor_table, Kind.DIVISOR)
    x = np.asarray(x, dtype=np.float64)
    hi = _floor_index(x + U, divisor_table.limit, lower=1.0)
    lo = _floor_index(x, divisor_table.limit, lower=1.0)
    count = (divisor_table.prefix[hi] - divisor_table.prefix[lo]).astype(np.float64)
    # (x+U)log(x+U) - x log x = U log(x+U) + x log1p(U/x)
    main = U * np.log(x + U) + x * np.log1p(U / x) + U * (2 * EULER_GAMMA - 1)
    return count - main


@dataclass(frozen=True)
class DeltaStarValue:
    combination: float
    direct: float

    def __float__(self):
        return float(self.combination)


def delta_star(x, divisor_table):
    """Both forms of the alternating error term at x (4x within the table).

    ``combination`` is -Delta(x) + 2 Delta(2x) - Delta(4x)/2 and ``direct`` is
    (1/2) sum_{n<=4x} (-1)^n d(n) - x(log x + 2gamma - 1).
    """
    _check_table(divisor_table, Kind.DIVISOR)
    xa = np.asarray(x, dtype=np.float64)
    if np.any(xa <= 0) or np.any(4 * xa >= divisor_table.limit + 1):
        raise OutOfRangeError(f"need 0 < 4x <= {divisor_table.limit}")
    x_ld = xa.astype(_LD)
    pre = divisor_table.prefix

    def part(y):
        return pre[np.floor(y).astype(np.int64)].astype(_LD) - divisor_main_term(y)

    comb = -part(x_ld) + 2 * part(2 * x_ld) - part(4 * x_ld) / 2
    alt = divisor_table.alternating_prefix[np.floor(4 * x_ld).astype(np.int64)].astype(_LD)
    direct = alt / 2 - divisor_main_term(x_ld)
    comb = comb.astype(np.float64)
    direct = direct.astype(np.float64)
    if xa.ndim == 0:
        return DeltaStarValue(float(comb), float(direct))
    return DeltaStarValue(comb, direct)


def circle_p(x, r_table):
    """Gauss circle error term; x in [0, limit] (empty sum below 1)."""
    _check_table(r_table, Kind.TWO_SQUARES)
    idx = _floor_index(x, r_table.limit)
    partial = np.where(idx >= 1, r_table.prefix[idx], 0).astype(_LD)
    out = (partial - _PI_LD * np.asarray(x, dtype=_LD)).astype(np.float64)
    return _scalar_or_array(out, x)


def circle_difference(x, U, r_table):
    _check_table(r_table, Kind.TWO_SQUARES)
    x = np.asarray(x, dtype=np.float64)
    hi = _floor_index(x + U, r_table.limit)
    lo = _floor_index(x, r_table.limit)
    return (r_table.prefix[hi] - r_table.prefix[lo]).astype(np.float64) - math.pi * U


def cusp_a(x, tau_table):
    """Exact partial sum of tau(n) over n <= x, as a Python int."""
    _check_table(tau_table, Kind.RAMANUJAN_TAU)
    if np.ndim(x) != 0:
        return np.array([cusp_a(v, tau_table) for v in np.asarray(x).ravel()],
                        dtype=object).reshape(np.shape(x))
    if x < 0 or x >= tau_table.limit + 1:
        raise OutOfRangeError(f"x={x} outside [0, {tau_table.limit}]")
    n = int(math.floor(x))
    return int(tau_table.prefix[n]) if n >= 1 else 0


def cusp_difference(x, U, tau_table):
    """A(x + U) - A(x) as float64 from exact integer differences."""
    _check_table(tau_table, Kind.RAMANUJAN_TAU)
    x = np.asarray(x, dtype=np.float64)
    hi = _floor_index(x + U, tau_table.limit)
    lo = _floor_index(x, tau_table.limit)
    diff = tau_table.prefix[hi] - tau_table.prefix[lo]
    return np.array([float(v) for v in np.ravel(diff)]).reshape(diff.shape)


def evaluate(kind, x, table):
    """Dispatch to the error term of ``kind``; Delta* returns its combination."""
    kind = ErrorTermKind.parse(kind)
    if kind is ErrorTermKind.DIRICHLET_DELTA:
        return delta(x, table)
    if kind is ErrorTermKind.ALTERNATING_DELTA_STAR:
        return delta_star(x, table).combination
    if kind is ErrorTermKind.CIRCLE_P:
        return circle_p(x, table)
    out = cusp_a(x, table)
    if np.ndim(x) == 0:
        return float(out)
    return np.array([float(v) for v in out.ravel()]).reshape(out.shape)

"""Large values of |zeta(1/2+it)| and close quadruples of k-th roots."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import InvalidArgumentError, OutOfRangeError, ResourceLimitError
from .zeta_line import DEFAULT_CONFIG, zeta_half_sq

MAX_QUADRUPLE_N = 120
# Pairs whose root sums differ by less than this are counted for any delta > 0;
# it is part of the count definition and keeps exact coincidences counted.
GUARD_BAND = 1e-12


@dataclass(frozen=True, eq=False)
class PeakSet:
    T: float
    V: float
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.points) < 1):
            raise InvalidArgumentError("peak points must be 1-separated")
        if np.any(self.values < self.V):
            raise InvalidArgumentError("peak values must be >= V")

    def __len__(self):
        return int(self.points.shape[0])


def scan_peaks(T, V, grid_step=0.05, config=DEFAULT_CONFIG):
    """Greedy 1-separated local maxima of |zeta(1/2+it)| >= V on [T, 2T].

    Candidates are taken largest first; a candidate closer than 1 to an
    already accepted point is dropped. Ties go to the smaller t.
    """
    if not 0 < grid_step <= 0.1:
        raise InvalidArgumentError("grid_step must be in (0, 0.1]")
    count = int(math.ceil(T / grid_step))
    t = np.linspace(T, 2 * T, count + 1)
    vals = np.sqrt(zeta_half_sq(t, config))
    interior = np.zeros(t.shape, dtype=bool)
    interior[1:-1] = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
    # endpoints count as maxima when they beat their single neighbour
    interior[0] = vals[0] >= vals[1]
    interior[-1] = vals[-1] >= vals[-2]
    cand = np.nonzero(interior & (vals >= V))[0]
    order = cand[np.lexsort((t[cand], -vals[cand]))]
    accepted = []
    for i in order:
        ti = t[i]
        if all(abs(ti - t[j]) >= 1 for j in accepted):
            accepted.append(i)
    accepted.sort()
    idx = np.array(accepted, dtype=np.int64)
    return PeakSet(float(T), float(V), t[idx], vals[idx])


@dataclass(frozen=True)
class LargeValueReport:
    T: float
    V: float
    k: int
    A: float
    G: float
    R: int
    rhs: float
    implied_constant: float

    def to_dict(self):
        return {"T": self.T, "V": self.V, "k": self.k, "A": self.A, "G": self.G,
                "R": self.R, "rhs": self.rhs, "implied_constant": self.implied_constant}


def large_value_report(peaks, k, A, e_curve, step=None):
    """Count R against V^(-2-2k) L^(2+2k) int_{T/3}^{3T} {|E(t+2G)-E(t-2G)|^k
    + |E(t+G/2)-E(t-G/2)|^k} dt with G = A (V/L)^2, L = log T."""
    if k not in (1, 2, 3, 4):
        raise InvalidArgumentError("k must be 1, 2, 3 or 4")
    if A <= 0:
        raise InvalidArgumentError("A must be positive")
    T, V = peaks.T, peaks.V
    L = math.log(T)
    G = A * (V / L) ** 2
    lo, hi = T / 3, 3 * T
    if not e_curve.covers(lo - 2 * G, hi + 2 * G):
        raise OutOfRangeError(f"E curve must cover [{lo - 2 * G}, {hi + 2 * G}]")
    h = step or float(e_curve.t_grid[1] - e_curve.t_grid[0])
    m = int(math.ceil((hi - lo) / h))
    m += m % 2
    t = np.linspace(lo, hi, m + 1)
    wide = np.abs(e_curve(t + 2 * G) - e_curve(t - 2 * G)) ** k
    narrow = np.abs(e_curve(t + G / 2) - e_curve(t - G / 2)) ** k
    integral = float(integrate.simpson(wide + narrow, x=t))
    rhs = V ** (-2 - 2 * k) * L ** (2 + 2 * k) * integral
    R = len(peaks)
    implied = R / rhs if rhs > 0 else 0.0
    return LargeValueReport(T, V, k, float(A), G, R, rhs, implied)


# --- close quadruples -------------------------------------------------------

@dataclass(frozen=True)
class QuadrupleCountResult:
    N: int
    k: int
    delta: float
    count: int

    @property
    def bound_scale(self):
        return self.N**4 * self.delta + self.N**2

    def to_dict(self):
        return {"N": self.N, "k": self.k, "delta": self.delta, "count": self.count,
                "bound_scale": self.bound_scale}


def kth_power_decomposition(n, k):
    """(m, r) with n = m^k r and r k-th-power free."""
    m, r = 1, n
    p = 2
    while p**k <= r:
        while r % p**k == 0:
            r //= p**k
            m *= p
        p += 1
    return m, r


def _pair_signature(a, b, k, decomp):
    ma, ra = decomp[a]
    mb, rb = decomp[b]
    if ra == rb:
        return ((ra, ma + mb),)
    return tuple(sorted(((ra, ma), (rb, mb))))


def count_close_quadruples(N, k, delta):
    """Ordered quadruples N < n1..n4 <= 2N with
    |n1^(1/k) + n2^(1/k) - n3^(1/k) - n4^(1/k)| < delta N^(1/k).

    delta = 0 counts exact equalities, decided algebraically: a sum of
    k-th roots is fixed by its multiset of (k-th-power-free part, multiplier)
    because such radicals are linearly independent over Q. For delta > 0 the
    comparison runs in double precision with ``GUARD_BAND`` added to the
    threshold.
    """
    N, k = int(N), int(k)
    if N < 1:
        raise InvalidArgumentError("N must be >= 1")
    if N > MAX_QUADRUPLE_N:
        raise ResourceLimitError(f"N={N} above budget {MAX_QUADRUPLE_N}")
    if k < 2:
        raise InvalidArgumentError("k must be >= 2")
    if delta < 0:
        raise InvalidArgumentError("delta must be >= 0")
    ns = range(N + 1, 2 * N + 1)
    if delta == 0:
        decomp = {n: kth_power_decomposition(n, k) for n in ns}
        sig = Counter(_pair_signature(a, b, k, decomp) for a in ns for b in ns)
        count = sum(c * c for c in sig.values())
        return QuadrupleCountResult(N, k, 0.0, count)
    roots = np.arange(N + 1, 2 * N + 1, dtype=np.float64) ** (1.0 / k)
    sums = np.sort((roots[:, None] + roots[None, :]).ravel())
    threshold = delta * N ** (1.0 / k) + GUARD_BAND
    count = int(_kernels.close_pair_count(sums, threshold))
    return QuadrupleCountResult(N, k, float(delta), count)

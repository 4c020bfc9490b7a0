"""Compiled inner loops. Everything here is pure and allocation-light."""

import math

import numba
import numpy as np

# Primes just below 2**31: products of two residues stay below 2**62.
TAU_MODULI = (2147483647, 2147483629, 2147483587, 2147483579)


@numba.njit(cache=True)
def divisor_sieve(limit):
    d = np.zeros(limit + 1, dtype=np.int64)
    for i in range(1, limit + 1):
        for j in range(i, limit + 1, i):
            d[j] += 1
    return d


@numba.njit(cache=True)
def two_squares_sieve(limit):
    # r(n) = 4 * sum_{delta | n} chi_4(delta); only odd delta contribute.
    r = np.zeros(limit + 1, dtype=np.int64)
    for i in range(1, limit + 1, 2):
        s = 1 if i % 4 == 1 else -1
        for j in range(i, limit + 1, i):
            r[j] += s
    for j in range(limit + 1):
        r[j] *= 4
    return r


def pentagonal_series(limit):
    """Sparse coefficients of prod_{m>=1} (1 - x^m) up to x^limit.

    Returns (exponents, signs) for the nonzero terms, exponent 0 excluded.
    """
    exps = []
    signs = []
    j = 1
    while True:
        a = j * (3 * j - 1) // 2
        if a > limit:
            break
        s = -1 if j % 2 else 1
        exps.append(a)
        signs.append(s)
        b = j * (3 * j + 1) // 2
        if b <= limit:
            exps.append(b)
            signs.append(s)
        j += 1
    order = np.argsort(exps, kind="stable")
    return (np.asarray(exps, dtype=np.int64)[order],
            np.asarray(signs, dtype=np.int64)[order])


@numba.njit(cache=True)
def _modpow(base, exp, mod):
    result = 1
    base %= mod
    while exp > 0:
        if exp & 1:
            result = (result * base) % mod
        base = (base * base) % mod
        exp >>= 1
    return result


@numba.njit(cache=True)
def power_series_power_mod(length, exps, signs, alpha, mod):
    """Coefficients p_0..p_{length-1} of E(x)**alpha modulo a prime.

    E = 1 + sum signs[i] x**exps[i] (sparse, exps ascending). Uses
    n p_n = sum_{k>=1} ((alpha + 1) k - n) e_k p_{n-k}, valid since e_0 = 1.
    """
    p = np.zeros(length, dtype=np.int64)
    p[0] = 1
    nexp = exps.shape[0]
    for n in range(1, length):
        acc = 0
        for i in range(nexp):
            k = exps[i]
            if k > n:
                break
            c = ((alpha + 1) * k - n) % mod
            if signs[i] < 0:
                c = (mod - c) % mod
            acc = (acc + c * p[n - k]) % mod
        p[n] = (acc * _modpow(n % mod, mod - 2, mod)) % mod
    return p


@numba.njit(cache=True)
def rs_main_sum(t, n_terms, theta, log_n, inv_sqrt_n):
    """sum_{n<=N} n^{-1/2} cos(theta(t) - t log n) for each t."""
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        ti = t[i]
        th = theta[i]
        s = 0.0
        for n in range(n_terms[i]):
            s += inv_sqrt_n[n] * math.cos(th - ti * log_n[n])
        out[i] = s
    return out


@numba.njit(cache=True)
def close_pair_count(sorted_sums, threshold):
    """Ordered pairs (i, j) with |s_i - s_j| < threshold on a sorted array."""
    m = sorted_sums.shape[0]
    total = 0
    lo = 0
    hi = 0
    for i in range(m):
        s = sorted_sums[i]
        while sorted_sums[lo] <= s - threshold:
            lo += 1
        while hi < m and sorted_sums[hi] < s + threshold:
            hi += 1
        total += hi - lo
    return total

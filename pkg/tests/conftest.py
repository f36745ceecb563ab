"""Shared test helpers: the brute-force counting oracle and input generators.

The oracle enumerates every index pair directly from the concordance
definitions; it shares no code path with any kernel under test.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
from numba import njit


@njit(cache=True)
def _pair_scan(u, v):
    n = u.shape[0]
    nc = np.int64(0)
    nd = np.int64(0)
    n1 = np.int64(0)
    n2 = np.int64(0)
    n3 = np.int64(0)
    for i in range(n):
        for j in range(i + 1, n):
            du = np.int64(u[i]) - np.int64(u[j])
            dv = np.int64(v[i]) - np.int64(v[j])
            p = du * dv
            if p > 0:
                nc += 1
            elif p < 0:
                nd += 1
            if du == 0:
                n1 += 1
            if dv == 0:
                n2 += 1
                if du == 0:
                    n3 += 1
    return nc, nd, n1, n2, n3


def brute_reference(u, v):
    """O(n^2) enumeration of all pair counts, straight from the definitions."""
    ua = np.asarray(u, dtype=np.int64)
    va = np.asarray(v, dtype=np.int64)
    nc, nd, n1, n2, n3 = (int(x) for x in _pair_scan(ua, va))
    n = ua.shape[0]
    n0 = n * (n - 1) // 2
    numerator = nc - nd
    tau_a = numerator / n0 if n0 else math.nan
    if n0 > n1 and n0 > n2:
        tau_b = numerator / math.sqrt(float(n0 - n1) * float(n0 - n2))
    else:
        tau_b = math.nan
    return SimpleNamespace(
        n=n,
        n0=n0,
        nc=nc,
        n_d=nd,
        n1=n1,
        n2=n2,
        n3=n3,
        numerator=numerator,
        tau_a=tau_a,
        tau_b=tau_b,
    )


def brute_inversions(values) -> int:
    """Strict inversion count: pairs i < j with values[i] > values[j]."""
    arr = np.asarray(values)
    total = 0
    for i in range(len(arr)):
        total += int(np.sum(arr[i + 1:] < arr[i]))
    return total


def random_rank_pair(rng, n: int, tie_fraction: float):
    """One (u, v) rank-vector pair; tie_fraction=0 gives distinct ranks."""
    if tie_fraction <= 0:
        return (
            rng.permutation(n).astype(np.int32),
            rng.permutation(n).astype(np.int32),
        )
    k = max(1, math.ceil(n * (1.0 - tie_fraction)))
    return (
        rng.integers(0, k, n).astype(np.int32),
        rng.integers(0, k, n).astype(np.int32),
    )


def random_sorted_run(rng, length: int, lo: int = 0, hi: int = 1 << 14):
    return np.sort(rng.integers(lo, hi, length)).astype(np.int32)

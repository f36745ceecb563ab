"""Branch-free quadratic tau-a kernel.

Enumerates every pair of joint observations and accumulates
sign((u_i - u_j) * (v_i - v_j)).  A pair is concordant iff that product is
positive, discordant iff negative, and neither when either coordinate is
tied, so the sum is exactly n_c - n_d without any tie bookkeeping.  The
sign is taken branch-free, so the runtime depends only on n, never on the
data.  This kernel computes tau-a only.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvalidInputError
from .ranks import as_rank_array
from .result import TauResult, result_tau_a_only


def sign3(x: int) -> int:
    """Three-way sign, computed without data-dependent branching."""
    return (x > 0) - (x < 0)


@njit(cache=True, nogil=True)
def naive_numerator(u, v):
    """Sum of sign((u_i-u_j)*(v_i-v_j)) over all i < j, in 64-bit arithmetic.

    Differences and products are widened to int64 before multiplying: engine
    inputs may carry 32-bit ranks, whose products overflow 32 bits.
    """
    n = u.shape[0]
    total = np.int64(0)
    for i in range(1, n):
        a = np.int64(u[i])
        b = np.int64(v[i])
        acc = np.int64(0)
        # reduction form, contiguous access: auto-vectorization friendly
        for j in range(i):
            p = (a - np.int64(u[j])) * (b - np.int64(v[j]))
            acc += np.int64(p > 0) - np.int64(p < 0)
        total += acc
    return total


def tau_a_naive(u, v) -> TauResult:
    """Quadratic-kernel tau-a for one pair of rank vectors.

    Tie counts are not computed (they stay zero in the result) and tau_b is
    reported as NaN; use the merge-sort or vectorized kernel for tau-b.

    Raises InvalidInputError when n < 2 or the lengths differ.
    """
    ua = as_rank_array(u, "u")
    va = as_rank_array(v, "v")
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    if ua.shape[0] < 2:
        raise InvalidInputError("need at least two observations")
    numerator = int(naive_numerator(ua, va))
    return result_tau_a_only(ua.shape[0], numerator)

"""Merge-sort tau-b kernel, O(n log n) with exact tie handling.

Five steps per pair:

1. sort the joint list (u_i, v_i) lexicographically (bottom-up merge sort);
2. one linear scan for the within-u tie pairs n1 and the joint tie pairs n3;
3. re-sort by v with a bottom-up merge that counts discordant pairs: after
   step 1 every element of a left run lexicographically precedes every
   element of the right run, so a cross-run pair is discordant exactly when
   the right element's v is strictly smaller -- each such event contributes
   the number of left-run elements not yet consumed;
4. one linear scan of the now v-sorted keys for n2;
5. numerator = n0 - n1 - n2 + n3 - 2*n_d, which equals n_c - n_d whether or
   not ties exist.

Tied v values in step 3 take the left element first; that both keeps the
merge stable and keeps tied pairs out of the discordant count.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvalidInputError
from .ranks import as_rank_array
from .result import TauResult, result_from_counts


@njit(cache=True, nogil=True)
def _merge_lex(au, av, bu, bv, left, mid, right):
    """Stable out-of-place merge of two (u, v)-sorted runs into (bu, bv)."""
    l = left
    r = mid
    p = left
    while l < mid and r < right:
        ru = au[r]
        lu = au[l]
        if ru < lu or (ru == lu and av[r] < av[l]):
            bu[p] = ru
            bv[p] = av[r]
            r += 1
        else:
            bu[p] = lu
            bv[p] = av[l]
            l += 1
        p += 1
    while l < mid:
        bu[p] = au[l]
        bv[p] = av[l]
        l += 1
        p += 1
    while r < right:
        bu[p] = au[r]
        bv[p] = av[r]
        r += 1
        p += 1


@njit(cache=True, nogil=True)
def _merge_by_v(au, av, bu, bv, left, mid, right):
    """Merge two runs on v alone, counting cross-run discordant pairs.

    The strict `<` is load-bearing: equal v values take the left element,
    so tied pairs are never counted and the merge stays stable.
    """
    nd = np.int64(0)
    l = left
    r = mid
    p = left
    while l < mid and r < right:
        if av[r] < av[l]:
            nd += mid - l
            bu[p] = au[r]
            bv[p] = av[r]
            r += 1
        else:
            bu[p] = au[l]
            bv[p] = av[l]
            l += 1
        p += 1
    while l < mid:
        bu[p] = au[l]
        bv[p] = av[l]
        l += 1
        p += 1
    while r < right:
        bu[p] = au[r]
        bv[p] = av[r]
        r += 1
        p += 1
    return nd


@njit(cache=True, nogil=True)
def _sort_pairs_lex(u, v, su, sv):
    """Bottom-up merge sort of the pair array by (u, then v), in place.

    (su, sv) is caller-provided scratch of the same length; the sorted data
    is copied back into (u, v) when the final pass lands in scratch.
    """
    n = u.shape[0]
    au = u
    av = v
    bu = su
    bv = sv
    in_place = True
    width = 1
    while width < n:
        l = 0
        while l < n:
            m = min(l + width, n)
            r = min(l + 2 * width, n)
            _merge_lex(au, av, bu, bv, l, m, r)
            l += 2 * width
        tu = au
        au = bu
        bu = tu
        tv = av
        av = bv
        bv = tv
        in_place = not in_place
        width *= 2
    if not in_place:
        for i in range(n):
            u[i] = au[i]
            v[i] = av[i]


@njit(cache=True, nogil=True)
def _sort_pairs_by_v(u, v, su, sv):
    """Bottom-up merge sort by v, accumulating the discordant-pair count."""
    n = u.shape[0]
    nd = np.int64(0)
    au = u
    av = v
    bu = su
    bv = sv
    in_place = True
    width = 1
    while width < n:
        l = 0
        while l < n:
            m = min(l + width, n)
            r = min(l + 2 * width, n)
            nd += _merge_by_v(au, av, bu, bv, l, m, r)
            l += 2 * width
        tu = au
        au = bu
        bu = tu
        tv = av
        av = bv
        bv = tv
        in_place = not in_place
        width *= 2
    if not in_place:
        for i in range(n):
            u[i] = au[i]
            v[i] = av[i]
    return nd


@njit(cache=True, nogil=True)
def _tie_pairs(keys):
    """Sum t*(t-1)/2 over maximal runs of equal values in a sorted array."""
    n = keys.shape[0]
    total = np.int64(0)
    run = np.int64(1)
    for i in range(1, n):
        if keys[i] == keys[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit(cache=True, nogil=True)
def _joint_tie_pairs(u, v):
    """Sum w*(w-1)/2 over maximal runs of identical (u, v) pairs."""
    n = u.shape[0]
    total = np.int64(0)
    run = np.int64(1)
    for i in range(1, n):
        if u[i] == u[i - 1] and v[i] == v[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit(cache=True, nogil=True)
def sorted_counts(u, v, wu, wv, su, sv):
    """Full five-step pipeline on caller-provided scratch.

    (wu, wv) receive a working copy of the input pair; (su, sv) is the merge
    buffer.  Returns (n_d, n1, n2, n3).  Safe to call concurrently as long
    as each worker owns its scratch.
    """
    n = u.shape[0]
    for i in range(n):
        wu[i] = u[i]
        wv[i] = v[i]
    _sort_pairs_lex(wu, wv, su, sv)
    n1 = _tie_pairs(wu)
    n3 = _joint_tie_pairs(wu, wv)
    nd = _sort_pairs_by_v(wu, wv, su, sv)
    n2 = _tie_pairs(wv)
    return nd, n1, n2, n3


def sort_joint(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Stable lexicographic sort of the joint pair list; returns new arrays."""
    ua = as_rank_array(u, "u").copy()
    va = as_rank_array(v, "v").copy()
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    _sort_pairs_lex(ua, va, np.empty_like(ua), np.empty_like(va))
    return ua, va


def tie_sum(keys) -> int:
    """Tied-pair count of a sorted key array: sum of t*(t-1)/2 per run."""
    return int(_tie_pairs(as_rank_array(keys, "keys")))


def joint_tie_sum(u, v) -> int:
    """Jointly-tied pair count of a lexicographically sorted pair list."""
    ua = as_rank_array(u, "u")
    va = as_rank_array(v, "v")
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    return int(_joint_tie_pairs(ua, va))


def count_discordant(u, v) -> tuple[int, np.ndarray, np.ndarray]:
    """Count discordant pairs of a lexicographically sorted pair list.

    Returns (n_d, u_by_v, v_by_v) where the returned arrays are the pair
    list re-sorted by v.  The input must already be sorted by (u, v); on
    any other input the count is meaningless.
    """
    ua = as_rank_array(u, "u").copy()
    va = as_rank_array(v, "v").copy()
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    nd = _sort_pairs_by_v(ua, va, np.empty_like(ua), np.empty_like(va))
    return int(nd), ua, va


def tau_b_sorted(u, v) -> TauResult:
    """Merge-sort-kernel tau-b (and tau-a) for one pair of rank vectors.

    Constant vectors are not an error: the result simply carries
    defined_b=False with tau_b as NaN.

    Raises InvalidInputError when n < 2 or the lengths differ.
    """
    ua = as_rank_array(u, "u")
    va = as_rank_array(v, "v")
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    n = ua.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two observations")
    wu = np.empty(n, np.int32)
    wv = np.empty(n, np.int32)
    su = np.empty(n, np.int32)
    sv = np.empty(n, np.int32)
    nd, n1, n2, n3 = sorted_counts(ua, va, wu, wv, su, sv)
    return result_from_counts(n, int(nd), int(n1), int(n2), int(n3))

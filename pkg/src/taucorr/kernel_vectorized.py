"""Vectorized tau-b kernel on packed rank pairs.

Same five steps as the merge-sort kernel, but every (u, v) rank pair is
packed into one signed 32-bit integer (u in bits 16..30, v in bits 0..14)
so that integer comparison equals lexicographic pair comparison.  Both the
initial sort and the discordant-counting passes then run over plain int32
arrays, merged W elements at a time through an in-register bitonic merge
network (W = 16 lanes, one 512-bit register's worth of int32).

The network itself is emitted as LLVM vector IR via a numba intrinsic when
possible, which lowers to native SIMD min/max/shuffle instructions; a pure
scalar implementation with identical semantics is kept as a fallback and
can be forced with TAUCORR_NO_SIMD=1.

A merge invokes the network only when lane extrema cannot already decide
the order (predict-and-skip); runs shorter than W fall back to a scalar
merge, and run tails are driven through the network with absent lanes
padded by INT32_MAX so the padding sorts past every real value.

The 15-bit rank budget caps the vector length at 32767; longer inputs must
use the merge-sort kernel.
"""

from __future__ import annotations

import os

import numpy as np
from numba import njit

from .errors import InvalidInputError
from .kernel_sorted import _tie_pairs
from .ranks import as_rank_array, check_pack_capacity
from .result import TauResult, result_from_counts

LANE_WIDTH = 16

_INT32_MAX = np.int32(0x7FFFFFFF)


@njit(cache=True, nogil=True)
def _merge_lanes_scalar(lo, hi):
    """Bitonic merge of two sorted lane vectors, any power-of-two width.

    In place: afterwards lo holds the smaller half and hi the larger half,
    each ascending.  Reverse one vector to form a bitonic sequence, then
    log2(2W) compare-exchange stages.
    """
    w = lo.shape[0]
    i = 0
    j = w - 1
    while i < j:
        t = hi[i]
        hi[i] = hi[j]
        hi[j] = t
        i += 1
        j -= 1
    k = 0
    while k < w:
        a = lo[k]
        b = hi[k]
        lo[k] = min(a, b)
        hi[k] = max(a, b)
        k += 1
    s = w >> 1
    while s >= 1:
        base = 0
        while base < w:
            k = base
            while k < base + s:
                a = lo[k]
                b = lo[k + s]
                lo[k] = min(a, b)
                lo[k + s] = max(a, b)
                a = hi[k]
                b = hi[k + s]
                hi[k] = min(a, b)
                hi[k + s] = max(a, b)
                k += 1
            base += s + s
        s >>= 1


@njit(cache=True, nogil=True)
def _insertion_sort16(block):
    """Scalar fallback for sorting one lane-width run in place."""
    n = block.shape[0]
    for i in range(1, n):
        key = block[i]
        j = i - 1
        while j >= 0 and block[j] > key:
            block[j + 1] = block[j]
            j -= 1
        block[j + 1] = key


def _build_simd_kernels():
    """Emit the 16-lane merge network and run-seeding sort network as LLVM IR.

    Both are constant sequences of vector shuffles, compares and blends;
    LLVM legalizes the <16 x i32> ops for whatever SIMD width the host
    actually has.  Returns (merge16, sort16) njit wrappers.
    """
    from llvmlite import ir
    from numba import types
    from numba.extending import intrinsic

    i32 = ir.IntType(32)
    vec = ir.VectorType(i32, 16)

    def lane_mask(idxs):
        return ir.Constant(ir.VectorType(i32, len(idxs)), [ir.Constant(i32, i) for i in idxs])

    def _is_i32_vec(t):
        return isinstance(t, types.Array) and t.dtype == types.int32 and t.ndim == 1

    def _vminmax(builder):
        def vmin(x, y):
            return builder.select(builder.icmp_signed("<", x, y), x, y)

        def vmax(x, y):
            return builder.select(builder.icmp_signed("<", x, y), y, x)

        return vmin, vmax

    @intrinsic
    def _net16(typingctx, lo_t, hi_t):
        if not (_is_i32_vec(lo_t) and _is_i32_vec(hi_t)):
            return None
        sig = types.void(lo_t, hi_t)

        def codegen(context, builder, signature, args):
            lo_ary = context.make_array(signature.args[0])(context, builder, value=args[0])
            hi_ary = context.make_array(signature.args[1])(context, builder, value=args[1])
            lo_ptr = builder.bitcast(lo_ary.data, vec.as_pointer())
            hi_ptr = builder.bitcast(hi_ary.data, vec.as_pointer())
            vlo = builder.load(lo_ptr, align=4)
            vhi = builder.load(hi_ptr, align=4)
            undef = ir.Constant(vec, ir.Undefined)
            vmin, vmax = _vminmax(builder)

            # reverse one vector to form a bitonic sequence, then log2(32)
            # compare-exchange stages
            vhi = builder.shuffle_vector(vhi, undef, lane_mask(list(range(15, -1, -1))))
            lo_v = vmin(vlo, vhi)
            hi_v = vmax(vlo, vhi)
            for s in (8, 4, 2, 1):
                partner = lane_mask([i ^ s for i in range(16)])
                blend = lane_mask([i if (i & s) == 0 else 16 + i for i in range(16)])
                t = builder.shuffle_vector(lo_v, undef, partner)
                lo_v = builder.shuffle_vector(vmin(lo_v, t), vmax(lo_v, t), blend)
                t = builder.shuffle_vector(hi_v, undef, partner)
                hi_v = builder.shuffle_vector(vmin(hi_v, t), vmax(hi_v, t), blend)
            builder.store(lo_v, lo_ptr, align=4)
            builder.store(hi_v, hi_ptr, align=4)
            return context.get_dummy_value()

        return sig, codegen

    @intrinsic
    def _sortnet16(typingctx, v_t):
        if not _is_i32_vec(v_t):
            return None
        sig = types.void(v_t)

        def codegen(context, builder, signature, args):
            ary = context.make_array(signature.args[0])(context, builder, value=args[0])
            ptr = builder.bitcast(ary.data, vec.as_pointer())
            v = builder.load(ptr, align=4)
            undef = ir.Constant(vec, ir.Undefined)
            vmin, vmax = _vminmax(builder)

            # full bitonic sorting network on one vector: lanes in the
            # descending half of each k-block take max where the ascending
            # half takes min
            for k in (2, 4, 8, 16):
                s = k >> 1
                while s >= 1:
                    partner = lane_mask([i ^ s for i in range(16)])
                    blend = lane_mask(
                        [
                            i if (((i & s) == 0) == ((i & k) == 0)) else 16 + i
                            for i in range(16)
                        ]
                    )
                    t = builder.shuffle_vector(v, undef, partner)
                    v = builder.shuffle_vector(vmin(v, t), vmax(v, t), blend)
                    s >>= 1
            builder.store(v, ptr, align=4)
            return context.get_dummy_value()

        return sig, codegen

    @njit(cache=True, nogil=True)
    def simd_merge16(lo, hi):
        _net16(lo, hi)

    @njit(cache=True, nogil=True)
    def simd_sort16(block):
        _sortnet16(block)

    # verify both against scalar references before trusting them
    rng = np.random.default_rng(0x5EED)
    for _ in range(16):
        a = np.sort(rng.integers(-1000, 1000, 16)).astype(np.int32)
        b = np.sort(rng.integers(-1000, 1000, 16)).astype(np.int32)
        a2 = a.copy()
        b2 = b.copy()
        simd_merge16(a, b)
        _merge_lanes_scalar(a2, b2)
        if not (np.array_equal(a, a2) and np.array_equal(b, b2)):
            raise RuntimeError("SIMD lane merge disagrees with scalar reference")
        c = rng.integers(-1000, 1000, 16).astype(np.int32)
        ref = np.sort(c)
        simd_sort16(c)
        if not np.array_equal(c, ref):
            raise RuntimeError("SIMD lane sort disagrees with scalar reference")
    return simd_merge16, simd_sort16


if os.environ.get("TAUCORR_NO_SIMD"):
    _simd_kernels = None
else:
    try:
        _simd_kernels = _build_simd_kernels()
    except Exception:  # pragma: no cover - depends on llvmlite/host specifics
        _simd_kernels = None

SIMD_LANES = _simd_kernels is not None

if SIMD_LANES:
    _merge_lanes16, _sort_lanes16 = _simd_kernels
else:  # pragma: no cover - exercised via TAUCORR_NO_SIMD runs
    _merge_lanes16 = _merge_lanes_scalar
    _sort_lanes16 = _insertion_sort16


@njit(cache=True, nogil=True)
def _leftover16(src, dst, l, r, p, mid, right, va, vb, hi_valid):
    """Drain run tails shorter than a full vector through the network.

    vb holds hi_valid pending values in its lane prefix; absent lanes are
    padded with INT32_MAX, which sorts past every packed value, so after
    each network pass the valid survivors sit in a lane prefix again (masks
    are therefore plain prefix counts).  Returns the output cursor.
    """
    w = va.shape[0]
    while l < mid or r < right:
        if l < mid and r < right:
            if src[r] < src[l]:
                valid = min(w, right - r)
                for t in range(valid):
                    va[t] = src[r + t]
                for t in range(valid, w):
                    va[t] = _INT32_MAX
                r += valid
            else:
                valid = min(w, mid - l)
                for t in range(valid):
                    va[t] = src[l + t]
                for t in range(valid, w):
                    va[t] = _INT32_MAX
                l += valid
        elif l < mid:
            valid = min(w, mid - l)
            for t in range(valid):
                va[t] = src[l + t]
            for t in range(valid, w):
                va[t] = _INT32_MAX
            # pending values all precede the rest of this run: flush and copy
            if hi_valid == 0 or vb[hi_valid - 1] <= va[0]:
                break
            l += valid
        else:
            valid = min(w, right - r)
            for t in range(valid):
                va[t] = src[r + t]
            for t in range(valid, w):
                va[t] = _INT32_MAX
            if hi_valid == 0 or vb[hi_valid - 1] <= va[0]:
                break
            r += valid
        _merge_lanes16(va, vb)
        nb = valid + hi_valid
        lo_valid = min(nb, w)
        hi_valid = nb - lo_valid
        for t in range(lo_valid):
            dst[p + t] = va[t]
        p += lo_valid
    for t in range(hi_valid):
        dst[p + t] = vb[t]
    p += hi_valid
    while l < mid:
        dst[p] = src[l]
        l += 1
        p += 1
    while r < right:
        dst[p] = src[r]
        r += 1
        p += 1
    return p


@njit(cache=True, nogil=True)
def _vse_merge16(src, dst, left, mid, right, va, vb, count, fast):
    """Merge src[left:mid) and src[mid:right) into dst, counting discordances.

    Discordant pairs are counted by a scalar cursor walk over the two runs
    (the event "right element strictly smaller" contributes the remaining
    left-run length); the merge itself then runs vector-at-a-time through
    the network.  `count=False` skips the counting walk (used by the initial
    sort, whose inversion count is meaningless).  `fast=False` disables the
    predict-and-skip shortcuts; the merged output is identical either way.
    """
    w = va.shape[0]
    nd = np.int64(0)
    if mid - left < w or right - mid < w:
        # short runs: branch-free scalar merge (select instead of branch;
        # random data would mispredict a comparison branch every other
        # element)
        l = left
        r = mid
        p = left
        while l < mid and r < right:
            lv = src[l]
            rv = src[r]
            take_right = np.int64(rv < lv)
            if count:
                nd += take_right * (mid - l)
            dst[p] = rv if rv < lv else lv
            r += take_right
            l += 1 - take_right
            p += 1
        while l < mid:
            dst[p] = src[l]
            l += 1
            p += 1
        while r < right:
            dst[p] = src[r]
            r += 1
            p += 1
        return nd
    if count:
        # branch-free cursor walk; adds the unconsumed left-run length per
        # "right element strictly smaller" event
        l = left
        r = mid
        while l < mid and r < right:
            take_right = np.int64(src[r] < src[l])
            nd += take_right * (mid - l)
            r += take_right
            l += 1 - take_right
    l = left
    r = mid
    p = left
    for t in range(w):
        va[t] = src[l + t]
        vb[t] = src[r + t]
    l += w
    r += w
    while True:
        # lane vectors stay ascending, so extrema are the end lanes
        if fast and va[0] >= vb[w - 1]:
            # every va lane >= every vb lane: vb is final as-is
            for t in range(w):
                dst[p + t] = vb[t]
            p += w
            for t in range(w):
                vb[t] = va[t]
        elif fast and vb[0] >= va[w - 1]:
            for t in range(w):
                dst[p + t] = va[t]
            p += w
        else:
            _merge_lanes16(va, vb)
            for t in range(w):
                dst[p + t] = va[t]
            p += w
        if l + w >= mid or r + w >= right:
            break
        if fast and vb[w - 1] <= src[l] and vb[w - 1] <= src[r]:
            # pending vector precedes everything unread: flush, refill both
            for t in range(w):
                dst[p + t] = vb[t]
            p += w
            for t in range(w):
                va[t] = src[l + t]
                vb[t] = src[r + t]
            l += w
            r += w
        elif src[r] < src[l]:
            for t in range(w):
                va[t] = src[r + t]
            r += w
        else:
            for t in range(w):
                va[t] = src[l + t]
            l += w
    _leftover16(src, dst, l, r, p, mid, right, va, vb, w)
    return nd


@njit(cache=True, nogil=True)
def _block_inversions(a, lo, hi):
    """Strict inversions inside a[lo:hi), by branch-free pair enumeration.

    Equals the cross-run discordances the sub-lane-width merge rounds would
    have accumulated for this block, so seeding runs at lane width keeps
    the total count exact.
    """
    inv = np.int64(0)
    for i in range(lo, hi):
        key = a[i]
        c = np.int64(0)
        for j in range(i + 1, hi):
            c += np.int64(a[j] < key)
        inv += c
    return inv


@njit(cache=True, nogil=True)
def _seed_runs(a, count):
    """Sort every lane-width block of `a` in place, counting its inversions.

    Establishes sorted runs of LANE_WIDTH (the ragged tail handled by
    insertion sort) so the bottom-up merge can start at lane width instead
    of width one.
    """
    n = a.shape[0]
    w = LANE_WIDTH
    nd = np.int64(0)
    base = 0
    while base + w <= n:
        if count:
            nd += _block_inversions(a, base, base + w)
        _sort_lanes16(a[base:base + w])
        base += w
    if base < n:
        if count:
            nd += _block_inversions(a, base, n)
        _insertion_sort16(a[base:n])
    return nd


@njit(cache=True, nogil=True)
def _sort_packed(a, b, va, vb, count, fast):
    """Bottom-up merge sort of packed int32 keys, in place in `a`.

    `b` is same-length scratch.  Runs are seeded at lane width, then merged
    bottom-up with the vectorized merge.  Returns the accumulated
    discordant count (zero when count=False).
    """
    n = a.shape[0]
    nd = _seed_runs(a, count)
    src = a
    dst = b
    in_place = True
    width = LANE_WIDTH
    while width < n:
        l = 0
        while l < n:
            m = min(l + width, n)
            r = min(l + 2 * width, n)
            nd += _vse_merge16(src, dst, l, m, r, va, vb, count, fast)
            l += 2 * width
        t = src
        src = dst
        dst = t
        in_place = not in_place
        width *= 2
    if not in_place:
        for i in range(n):
            a[i] = src[i]
    return nd


@njit(cache=True, nogil=True)
def _packed_tie_pairs(packed):
    """(n1, n3) scans over a lexicographically sorted packed array.

    n1 sums tied pairs of the u halves (bits 16..30), n3 of the full packed
    values (joint ties); one linear pass covers both.
    """
    n = packed.shape[0]
    n1 = np.int64(0)
    n3 = np.int64(0)
    run_u = np.int64(1)
    run_j = np.int64(1)
    for i in range(1, n):
        cur = packed[i]
        prev = packed[i - 1]
        if (cur >> 16) == (prev >> 16):
            run_u += 1
        else:
            n1 += run_u * (run_u - 1) // 2
            run_u = 1
        if cur == prev:
            run_j += 1
        else:
            n3 += run_j * (run_j - 1) // 2
            run_j = 1
    n1 += run_u * (run_u - 1) // 2
    n3 += run_j * (run_j - 1) // 2
    return n1, n3


@njit(cache=True, nogil=True)
def vectorized_counts(u, v, pa, pb, va, vb, fast):
    """Packed pipeline on caller-provided scratch; returns (n_d, n1, n2, n3).

    pa/pb are n-length int32 buffers, va/vb are lane vectors.  Safe to call
    concurrently as long as each worker owns its scratch.
    """
    n = u.shape[0]
    for i in range(n):
        pa[i] = (np.int64(u[i]) << 16) | np.int64(v[i])
    _sort_packed(pa, pb, va, vb, False, fast)
    n1, n3 = _packed_tie_pairs(pa)
    for i in range(n):
        pa[i] = pa[i] & np.int32(0x7FFF)
    nd = _sort_packed(pa, pb, va, vb, True, fast)
    n2 = _tie_pairs(pa)
    return nd, n1, n2, n3


def bitonic_merge_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Merge two sorted lane vectors; returns (lo, hi) as new arrays.

    lo followed by hi is the ascending sort of all 2W inputs.  W must be a
    power of two; W = 16 uses the SIMD network when available, other widths
    use the scalar network (identical results).
    """
    lo = as_rank_array(a, "a").copy()
    hi = as_rank_array(b, "b").copy()
    if lo.shape[0] != hi.shape[0]:
        raise InvalidInputError(f"lane count mismatch: {lo.shape[0]} vs {hi.shape[0]}")
    w = lo.shape[0]
    if w & (w - 1):
        raise InvalidInputError(f"lane count must be a power of two, got {w}")
    if w == LANE_WIDTH:
        _merge_lanes16(lo, hi)
    else:
        _merge_lanes_scalar(lo, hi)
    return lo, hi


def vse_merge(src, dst, left, mid, right, count: bool = True, fast: bool = True) -> int:
    """Merge two adjacent sorted runs of packed keys, counting discordances.

    src[left:mid) and src[mid:right) must each be ascending; dst[left:right)
    receives the merged output.  Returns the discordant-pair count (the
    number of cross-run events where the right element is strictly smaller,
    weighted by the unconsumed left-run length).  Packed values must be
    non-negative and below INT32_MAX, which the packed layout guarantees.
    """
    s = np.ascontiguousarray(src, dtype=np.int32)
    if not (isinstance(dst, np.ndarray) and dst.dtype == np.int32 and dst.flags.c_contiguous):
        raise InvalidInputError("dst must be a contiguous int32 array")
    if not 0 <= left <= mid <= right <= s.shape[0] or right > dst.shape[0]:
        raise InvalidInputError("run bounds out of range")
    va = np.empty(LANE_WIDTH, np.int32)
    vb = np.empty(LANE_WIDTH, np.int32)
    return int(_vse_merge16(s, dst, left, mid, right, va, vb, count, fast))


def merge_leftover(src, dst, cursors, hi, hi_valid: int | None = None) -> int:
    """Finish a vectorized merge once a run has fewer than W elements left.

    cursors is (l, r, p, mid, right): the two input cursors, the output
    cursor, and the run bounds.  `hi` holds the pending lane vector from the
    main merge loop (valid prefix length hi_valid, full by default); its
    values must not exceed the remaining run elements' ordering constraints
    other than by the merge invariant.  Returns the final output cursor.
    """
    l, r, p, mid, right = cursors
    s = np.ascontiguousarray(src, dtype=np.int32)
    if not (isinstance(dst, np.ndarray) and dst.dtype == np.int32 and dst.flags.c_contiguous):
        raise InvalidInputError("dst must be a contiguous int32 array")
    pending = as_rank_array(hi, "hi").copy()
    if pending.shape[0] != LANE_WIDTH:
        raise InvalidInputError(f"hi must have {LANE_WIDTH} lanes")
    if hi_valid is None:
        hi_valid = LANE_WIDTH
    if not 0 <= hi_valid <= LANE_WIDTH:
        raise InvalidInputError("hi_valid out of range")
    pending[hi_valid:] = _INT32_MAX  # pad lanes must sort past every value
    va = np.empty(LANE_WIDTH, np.int32)
    return int(_leftover16(s, dst, l, r, p, mid, right, va, pending, hi_valid))


def tau_b_vectorized(u, v, fast: bool = True) -> TauResult:
    """Vectorized-kernel tau-b for one pair of rank vectors.

    Produces counts bit-identical to tau_b_sorted.  Raises
    CapacityExceededError when n > 32767 or any rank needs 15+ bits (fall
    back to tau_b_sorted), InvalidInputError when n < 2 or lengths differ.
    """
    ua = as_rank_array(u, "u")
    va_ = as_rank_array(v, "v")
    if ua.shape[0] != va_.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va_.shape[0]}")
    n = ua.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two observations")
    check_pack_capacity(ua, va_)
    pa = np.empty(n, np.int32)
    pb = np.empty(n, np.int32)
    la = np.empty(LANE_WIDTH, np.int32)
    lb = np.empty(LANE_WIDTH, np.int32)
    nd, n1, n2, n3 = vectorized_counts(ua, va_, pa, pb, la, lb, fast)
    return result_from_counts(n, int(nd), int(n1), int(n2), int(n3))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_inversions, random_sorted_run
from taucorr import (
    CapacityExceededError,
    InvalidInputError,
    LANE_WIDTH,
    bitonic_merge_pair,
    merge_leftover,
    tau_b_sorted,
    tau_b_vectorized,
    vse_merge,
)


def scalar_merge_oracle(a, b):
    return np.sort(np.concatenate([np.asarray(a), np.asarray(b)]))


class TestBitonicMergePair:
    def test_interleaved_w4(self):
        lo, hi = bitonic_merge_pair([1, 3, 5, 7], [2, 4, 6, 8])
        ref = scalar_merge_oracle([1, 3, 5, 7], [2, 4, 6, 8])
        assert lo.tolist() == ref[:4].tolist() == [1, 2, 3, 4]
        assert hi.tolist() == ref[4:].tolist() == [5, 6, 7, 8]

    def test_all_zero(self):
        lo, hi = bitonic_merge_pair([0] * LANE_WIDTH, [0] * LANE_WIDTH)
        assert not lo.any() and not hi.any()

    def test_disjoint_ranges_swap(self):
        lo, hi = bitonic_merge_pair([5, 6, 7, 8], [1, 2, 3, 4])
        assert lo.tolist() == [1, 2, 3, 4]
        assert hi.tolist() == [5, 6, 7, 8]

    @pytest.mark.parametrize("w", [1, 2, 4, 8, 16, 32])
    def test_random_vs_scalar_merge(self, w):
        rng = np.random.default_rng(w)
        for _ in range(300):
            a = random_sorted_run(rng, w, -50, 50)
            b = random_sorted_run(rng, w, -50, 50)
            lo, hi = bitonic_merge_pair(a, b)
            merged = np.concatenate([lo, hi])
            assert np.array_equal(merged, scalar_merge_oracle(a, b))

    @pytest.mark.parametrize("w", [8, 16])
    def test_zero_one_exhaustive(self, w):
        # all sorted 0/1 vectors: by the 0-1 principle this certifies the
        # network for arbitrary inputs at this width
        for za in range(w + 1):
            a = np.array([0] * za + [1] * (w - za), np.int32)
            for zb in range(w + 1):
                b = np.array([0] * zb + [1] * (w - zb), np.int32)
                lo, hi = bitonic_merge_pair(a, b)
                assert np.array_equal(np.concatenate([lo, hi]), scalar_merge_oracle(a, b))

    def test_rejects_mismatched_or_non_power_widths(self):
        with pytest.raises(InvalidInputError):
            bitonic_merge_pair([1, 2, 3], [1, 2, 3])
        with pytest.raises(InvalidInputError):
            bitonic_merge_pair([1, 2], [1, 2, 3, 4])


def run_vse_case(left_run, right_run, fast=True, count=True):
    src = np.concatenate([left_run, right_run]).astype(np.int32)
    dst = np.zeros_like(src)
    nd = vse_merge(src, dst, 0, len(left_run), len(src), count=count, fast=fast)
    return nd, dst


def cross_run_inversions(left_run, right_run):
    total = 0
    for x in right_run:
        total += int(np.sum(np.asarray(left_run) > x))
    return total


class TestVseMerge:
    def test_adjacent_runs_no_inversions(self):
        nd, dst = run_vse_case([1, 2, 3, 4], [5, 6, 7, 8])
        assert nd == 0
        assert dst.tolist() == [1, 2, 3, 4, 5, 6, 7, 8]

    def test_interleaved_counts(self):
        left, right = [10, 20, 30], [5, 15, 25]
        assert cross_run_inversions(left, right) == 6
        nd, dst = run_vse_case(left, right)
        assert nd == 6
        assert dst.tolist() == [5, 10, 15, 20, 25, 30]

    def test_ties_never_discordant(self):
        nd, dst = run_vse_case([1, 1], [1, 1])
        assert nd == 0
        assert dst.tolist() == [1, 1, 1, 1]

    @pytest.mark.parametrize("fast", [True, False])
    def test_random_runs_vs_oracle(self, fast):
        rng = np.random.default_rng(7 if fast else 8)
        for _ in range(250):
            la = int(rng.integers(1, 120))
            lb = int(rng.integers(1, 120))
            hi = int(rng.choice([4, 50, 20000]))
            a = random_sorted_run(rng, la, 0, hi)
            b = random_sorted_run(rng, lb, 0, hi)
            nd, dst = run_vse_case(a, b, fast=fast)
            assert np.array_equal(dst, scalar_merge_oracle(a, b))
            assert nd == cross_run_inversions(a, b)

    def test_fast_paths_are_pure_optimization(self):
        rng = np.random.default_rng(9)
        cases = []
        for _ in range(150):
            la = int(rng.integers(1, 100))
            lb = int(rng.integers(1, 100))
            cases.append(
                (random_sorted_run(rng, la, 0, 30), random_sorted_run(rng, lb, 0, 30))
            )
        # adversarial shapes: all-equal, fully disjoint either way
        cases.append((np.full(40, 7, np.int32), np.full(64, 7, np.int32)))
        cases.append((np.arange(64, dtype=np.int32), np.arange(64, 128, dtype=np.int32)))
        cases.append((np.arange(64, 128, dtype=np.int32), np.arange(64, dtype=np.int32)))
        for a, b in cases:
            nd_fast, dst_fast = run_vse_case(a, b, fast=True)
            nd_slow, dst_slow = run_vse_case(a, b, fast=False)
            assert nd_fast == nd_slow
            assert np.array_equal(dst_fast, dst_slow)

    def test_count_flag_only_affects_count(self):
        rng = np.random.default_rng(10)
        a = random_sorted_run(rng, 70, 0, 20)
        b = random_sorted_run(rng, 50, 0, 20)
        nd, dst = run_vse_case(a, b, count=True)
        nd0, dst0 = run_vse_case(a, b, count=False)
        assert nd0 == 0
        assert np.array_equal(dst, dst0)


class TestMergeLeftover:
    def test_right_remainder_merges_with_pending(self):
        hi = np.arange(1, LANE_WIDTH + 1, dtype=np.int32)  # pending sorted vector
        src = np.concatenate([np.zeros(0, np.int32), np.array([9, 10], np.int32)])
        dst = np.zeros(2 + LANE_WIDTH, np.int32)
        end = merge_leftover(src, dst, (0, 0, 0, 0, 2), hi)
        assert end == 2 + LANE_WIDTH
        assert dst.tolist() == np.sort(np.concatenate([hi, src])).tolist()

    def test_both_runs_empty_writes_pending_verbatim(self):
        hi = np.sort(np.random.default_rng(1).integers(0, 99, LANE_WIDTH)).astype(np.int32)
        dst = np.zeros(LANE_WIDTH, np.int32)
        end = merge_leftover(np.zeros(0, np.int32), dst, (0, 0, 0, 0, 0), hi)
        assert end == LANE_WIDTH
        assert dst.tolist() == hi.tolist()

    def test_padding_never_reaches_output(self):
        # remainder shorter than a vector: the INT32_MAX pad lanes must not leak
        hi = np.arange(100, 100 + LANE_WIDTH, dtype=np.int32)
        src = np.array([1, 2, 3], np.int32)
        dst = np.zeros(3 + LANE_WIDTH, np.int32)
        end = merge_leftover(src, dst, (0, 3, 0, 3, 3), hi)
        assert end == 3 + LANE_WIDTH
        assert dst.max() < np.iinfo(np.int32).max
        assert dst.tolist() == np.sort(np.concatenate([hi, src])).tolist()

    def test_partial_pending_prefix(self):
        hi = np.zeros(LANE_WIDTH, np.int32)
        hi[:4] = [2, 4, 6, 8]
        src = np.array([1, 3, 5], np.int32)
        dst = np.zeros(7, np.int32)
        end = merge_leftover(src, dst, (0, 3, 0, 3, 3), hi, hi_valid=4)
        assert end == 7
        assert dst.tolist() == [1, 2, 3, 4, 5, 6, 8]


class TestTauBVectorized:
    def test_identity_sixteen(self):
        res = tau_b_vectorized(list(range(16)), list(range(16)))
        assert res.tau_b == 1.0

    def test_tied_example(self):
        res = tau_b_vectorized([1, 1, 2], [1, 2, 2])
        assert res.tau_b == 0.5

    def test_matches_sorted_kernel(self):
        rng = np.random.default_rng(12)
        for _ in range(60):
            n = int(rng.integers(2, 700))
            k = max(1, int(n * float(rng.choice([1.0, 0.7, 0.1]))))
            u = rng.integers(0, k, n).astype(np.int32)
            v = rng.integers(0, k, n).astype(np.int32)
            a = tau_b_vectorized(u, v)
            b = tau_b_sorted(u, v)
            assert (a.numerator, a.n_d, a.n1, a.n2, a.n3) == (
                b.numerator,
                b.n_d,
                b.n1,
                b.n2,
                b.n3,
            )

    @settings(deadline=None, max_examples=60)
    @given(
        st.integers(2, 48).flatmap(
            lambda n: st.tuples(
                st.lists(st.integers(0, 8), min_size=n, max_size=n),
                st.lists(st.integers(0, 8), min_size=n, max_size=n),
            )
        )
    )
    def test_matches_sorted_kernel_property(self, pair):
        u, v = pair
        a = tau_b_vectorized(u, v)
        b = tau_b_sorted(u, v)
        assert (a.numerator, a.n_d, a.n1, a.n2, a.n3) == (b.numerator, b.n_d, b.n1, b.n2, b.n3)

    def test_equal_vectors_have_no_discordance(self):
        u = np.tile(np.arange(8, dtype=np.int32), 16)
        res = tau_b_vectorized(u, u)
        assert res.n_d == 0
        assert res.tau_b == 1.0

    def test_capacity_errors(self):
        n = 32768
        with pytest.raises(CapacityExceededError):
            tau_b_vectorized(np.zeros(n, np.int32), np.zeros(n, np.int32))
        with pytest.raises(CapacityExceededError):
            tau_b_vectorized([0, 32768], [0, 1])

    def test_invalid_inputs(self):
        with pytest.raises(InvalidInputError):
            tau_b_vectorized([1], [1])
        with pytest.raises(InvalidInputError):
            tau_b_vectorized([1, 2], [1, 2, 3])

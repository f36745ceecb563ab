"""Rank transform and 32-bit pair packing.

Kendall's tau depends only on orderings, so raw observation vectors are
replaced once, up front, by dense integer ranks: tied values share a rank
and the distinct ranks are exactly 0..k-1.  Dense ranks keep values as
small as possible, which is what lets a rank pair fit the 15+15-bit packed
layout used by the vectorized kernel.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityExceededError, InvalidInputError

# Largest vector the packed representation can hold: every dense rank must
# fit in 15 bits, so n is capped at 2**15 - 1.
PACK_MAX_N = 32767
PACK_MAX_RANK = 1 << 15
_LOW15 = np.int32(0x7FFF)


def as_rank_array(values, name: str = "ranks") -> np.ndarray:
    """Validate and convert an integer rank vector to contiguous int32."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if arr.dtype.kind not in "iu":
        raise InvalidInputError(f"{name} must hold integer ranks, got dtype {arr.dtype}")
    if arr.size and (int(arr.min()) < np.iinfo(np.int32).min or int(arr.max()) > np.iinfo(np.int32).max):
        raise InvalidInputError(f"{name} values exceed 32-bit range")
    return np.ascontiguousarray(arr, dtype=np.int32)


def rank_transform(values) -> np.ndarray:
    """Replace each observation with its dense 0-based rank.

    Ties share a rank, the distinct ranks form 0..k-1, and order is
    preserved: values[i] < values[j] iff ranks[i] < ranks[j].  Idempotent on
    already-dense rank vectors.

    Raises InvalidInputError on empty input or non-comparable (NaN) values.
    """
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"observations must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError("observations are empty")
    if arr.dtype.kind not in "iuf":
        try:
            arr = arr.astype(np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"observations are not orderable numbers: {exc}") from None
    if arr.dtype.kind == "f" and np.isnan(arr).any():
        raise InvalidInputError("observations contain NaN, which has no rank")
    # np.unique sorts the distinct values; the inverse indices are exactly
    # the dense ranks.
    _, inverse = np.unique(arr, return_inverse=True)
    return np.ascontiguousarray(inverse, dtype=np.int32)


def check_pack_capacity(u: np.ndarray, v: np.ndarray) -> None:
    """Raise CapacityExceededError if (u, v) cannot be packed into int32."""
    n = u.shape[0]
    if n > PACK_MAX_N:
        raise CapacityExceededError(
            f"vector length {n} exceeds the packed-kernel limit of {PACK_MAX_N}"
        )
    if int(u.min()) < 0 or int(v.min()) < 0:
        raise CapacityExceededError("packed ranks must be non-negative")
    if int(u.max()) >= PACK_MAX_RANK or int(v.max()) >= PACK_MAX_RANK:
        raise CapacityExceededError(
            f"ranks must be below 2**15 = {PACK_MAX_RANK} to pack into 32 bits"
        )


def pack_pairs(u, v) -> np.ndarray:
    """Pack rank pairs (u[i], v[i]) into signed 32-bit integers.

    u occupies bits 16..30 and v bits 0..14, with bits 15 and 31 always
    zero, so signed integer comparison of packed values equals the
    lexicographic comparison of (u, v) pairs.

    Raises InvalidInputError on length mismatch and CapacityExceededError
    when n > 32767 or any rank needs 15+ bits (callers then fall back to
    the merge-sort kernel).
    """
    ua = as_rank_array(u, "u")
    va = as_rank_array(v, "v")
    if ua.shape[0] != va.shape[0]:
        raise InvalidInputError(f"length mismatch: {ua.shape[0]} vs {va.shape[0]}")
    check_pack_capacity(ua, va)
    return ((ua.astype(np.int32) << np.int32(16)) | va.astype(np.int32)).astype(np.int32)


def unpack_pairs(packed) -> tuple[np.ndarray, np.ndarray]:
    """Recover the (u, v) rank vectors from a packed array."""
    p = np.ascontiguousarray(packed, dtype=np.int32)
    return (p >> np.int32(16)).astype(np.int32), (p & _LOW15).astype(np.int32)


def mask_low_half(packed) -> np.ndarray:
    """Zero the u half of each packed value, keeping only bits 0..14 (the v rank).

    Used as the preprocessing step before the discordant-counting merge
    passes of the vectorized kernel.
    """
    p = np.ascontiguousarray(packed, dtype=np.int32)
    return (p & _LOW15).astype(np.int32)

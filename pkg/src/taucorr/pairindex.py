"""Bijections between linear identifiers and upper-triangle coordinates.

The m*m job matrix is only computed on its upper triangle (diagonal
included).  Jobs are numbered left-to-right, top-to-bottom, so scheduling
can hand out plain integer ranges; the closed-form inverse recovers the
(row, column) of any identifier without search.  Tiling reuses the same
mapping on the ceil(m/q) * ceil(m/q) tile matrix, which has the identical
triangular structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .errors import InvalidInputError


def row_prefix(y: int, m: int) -> int:
    """Number of upper-triangle cells strictly above row y: y*(2m-y+1)/2."""
    if not 0 <= y <= m:
        raise InvalidInputError(f"row {y} out of range for dimension {m}")
    return y * (2 * m - y + 1) // 2


def job_id(y: int, x: int, m: int) -> int:
    """Linear identifier of upper-triangle cell (y, x): row_prefix(y) + x - y."""
    if not 0 <= y <= x < m:
        raise InvalidInputError(f"({y}, {x}) is not an upper-triangle cell of a {m}x{m} matrix")
    return row_prefix(y, m) + x - y


def job_coord(j: int, m: int) -> tuple[int, int]:
    """Inverse of job_id: the unique (y, x) with row_prefix(y) <= j < row_prefix(y+1).

    The row comes from the closed form ceil(m - 0.5 - sqrt(m^2 + m + 0.25
    - 2(j+1))), then an integer correction step repairs any floating-point
    rounding (the discriminant loses ulps once m^2 approaches 2^53), so the
    bijection is exact for every representable m.
    """
    total = m * (m + 1) // 2
    if not 0 <= j < total:
        raise InvalidInputError(f"job id {j} out of range [0, {total})")
    y = math.ceil(m - 0.5 - math.sqrt(m * m + m + 0.25 - 2.0 * (j + 1)))
    if y < 0:
        y = 0
    elif y > m - 1:
        y = m - 1
    while row_prefix(y, m) > j:
        y -= 1
    while row_prefix(y + 1, m) <= j:
        y += 1
    x = j + y - row_prefix(y, m)
    return y, x


def tile_id(y_q: int, x_q: int, w: int) -> int:
    """Linear identifier of tile (y_q, x_q) in the w*w tile matrix."""
    return job_id(y_q, x_q, w)


def tile_coord(j_w: int, w: int) -> tuple[int, int]:
    """Inverse of tile_id."""
    return job_coord(j_w, w)


def shard_range(i: int, p: int, space: "JobSpace") -> tuple[int, int]:
    """Contiguous tile-id slice [lo, hi) owned by shard i of p.

    Shards are ceil(total/p) tiles each, clipped at the end; their union
    tiles [0, total_tiles) disjointly.  Shards past the end are empty.
    """
    if p < 1 or not 0 <= i < p:
        raise InvalidInputError(f"shard index {i} out of range for {p} shards")
    total = space.total_tiles
    chunk = -(-total // p)
    lo = min(i * chunk, total)
    hi = min(lo + chunk, total)
    return lo, hi


@dataclass(frozen=True)
class JobSpace:
    """Geometry of the all-pairs job space: dimension m, tile width q."""

    m: int
    q: int

    def __post_init__(self):
        if self.m < 1:
            raise InvalidInputError(f"dimension must be positive, got {self.m}")
        if self.q < 1:
            raise InvalidInputError(f"tile width must be positive, got {self.q}")

    @property
    def w(self) -> int:
        """Tile-matrix width: ceil(m / q)."""
        return -(-self.m // self.q)

    @property
    def total_jobs(self) -> int:
        return self.m * (self.m + 1) // 2

    @property
    def total_tiles(self) -> int:
        w = self.w
        return w * (w + 1) // 2

    def tile_bounds(self, y_q: int, x_q: int) -> tuple[int, int, int, int]:
        """Half-open (row0, row1, col0, col1) of a tile, clipped at m."""
        r0 = y_q * self.q
        c0 = x_q * self.q
        return r0, min(r0 + self.q, self.m), c0, min(c0 + self.q, self.m)

    def tile_cells(self, y_q: int, x_q: int) -> Iterator[tuple[int, int]]:
        """Upper-triangle cells of one tile, row-major.

        Diagonal tiles yield their triangular portion including the major
        diagonal; off-diagonal tiles yield their full (possibly
        edge-clipped) block.  This iteration order is the output order
        contract: the engine emits cells of a tile in exactly this order.
        """
        if not 0 <= y_q <= x_q < self.w:
            raise InvalidInputError(f"({y_q}, {x_q}) is not an upper-triangle tile")
        r0, r1, c0, c1 = self.tile_bounds(y_q, x_q)
        for i in range(r0, r1):
            for j in range(max(i, c0), c1):
                yield i, j

    def tile_cell_count(self, y_q: int, x_q: int) -> int:
        """Number of cells tile_cells would yield, without iterating pairs."""
        r0, r1, c0, c1 = self.tile_bounds(y_q, x_q)
        total = 0
        for i in range(r0, r1):
            total += max(0, c1 - max(i, c0))
        return total

"""Tiled, multi-pass, statically scheduled all-pairs driver.

The upper triangle of the m*m pair matrix is covered by q*q tiles; tiles
are numbered linearly and processed in contiguous identifier sub-ranges
(passes), each computed into a bounded result buffer before being handed
to the sink, so peak result memory is independent of m.  Within a pass,
tiles are assigned to workers statically, round-robin by tile ordinal;
workers hold the GIL released inside the compiled per-tile loops and write
disjoint buffer slices, so output is bit-identical for any worker count.
With overlap enabled, pass k+1 computes into a second buffer while pass
k's buffer is written out (double buffering; the sink itself is only ever
driven by one thread at a time, in pass order).

Tiles give temporal locality on q rows plus q columns of the rank matrix;
each worker reuses one set of kernel scratch buffers, sized to n, for
every cell it computes.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigError, InvalidInputError
from .kernel_naive import naive_numerator
from .kernel_sorted import sorted_counts
from .kernel_vectorized import LANE_WIDTH, vectorized_counts
from .pairindex import JobSpace, shard_range, tile_coord
from .ranks import PACK_MAX_N, PACK_MAX_RANK
from .result import TauResult, derive_taus

logger = logging.getLogger("taucorr")

KERNELS = ("naive", "sorted", "vectorized")

# One flattened result record per upper-triangle cell.  Integer counts are
# the authoritative output; tau values are derived by readers.  The layout
# doubles as the binary file record.
CELL_DTYPE = np.dtype(
    [
        ("i", "<u4"),
        ("j", "<u4"),
        ("numerator", "<i8"),
        ("n_d", "<u8"),
        ("n1", "<u8"),
        ("n2", "<u8"),
        ("n3", "<u8"),
    ]
)


@dataclass
class Dataset:
    """m rank vectors of common length n, plus their labels."""

    labels: list[str]
    ranks: np.ndarray

    def __post_init__(self):
        self.ranks = np.ascontiguousarray(self.ranks, dtype=np.int32)
        if self.ranks.ndim != 2:
            raise InvalidInputError(f"ranks must be 2-D (variables x observations), got {self.ranks.ndim}-D")
        if self.ranks.shape[0] < 1 or self.ranks.shape[1] < 1:
            raise InvalidInputError("dataset is empty")
        self.labels = [str(s) for s in self.labels]
        if len(self.labels) != self.ranks.shape[0]:
            raise InvalidInputError(
                f"{len(self.labels)} labels for {self.ranks.shape[0]} variables"
            )
        if len(set(self.labels)) != len(self.labels):
            raise InvalidInputError("variable labels must be unique")
        # capacity flag for the packed kernel: every rank must fit 15 bits
        self._packed_ready = bool(
            self.ranks.shape[1] <= PACK_MAX_N
            and self.ranks.min() >= 0
            and self.ranks.max() < PACK_MAX_RANK
        )

    @property
    def m(self) -> int:
        return self.ranks.shape[0]

    @property
    def n(self) -> int:
        return self.ranks.shape[1]

    @property
    def packed_ready(self) -> bool:
        return self._packed_ready


@dataclass(frozen=True)
class PassPlan:
    """One contiguous tile-id sub-range and its exact buffer size in cells."""

    pass_index: int
    tile_lo: int
    tile_hi: int
    cells: int


@dataclass(frozen=True)
class CellResult:
    """One upper-triangle cell, unpacked from a flat record."""

    i: int
    j: int
    result: TauResult


@dataclass
class PassStats:
    index: int
    tiles: int
    cells: int
    compute_seconds: float
    write_seconds: float


@dataclass
class RunSummary:
    kernel: str
    requested_kernel: str
    workers: int
    tile_size: int
    pass_tiles: int
    shard: tuple[int, int] | None
    total_tiles: int
    total_cells: int
    elapsed_seconds: float
    buffer_bytes: int
    passes: list[PassStats] = field(default_factory=list)

    @property
    def cells_per_second(self) -> float:
        if self.elapsed_seconds <= 0:
            return float("inf")
        return self.total_cells / self.elapsed_seconds


def plan_passes(space: JobSpace, tile_range: tuple[int, int], pass_tiles: int) -> list[PassPlan]:
    """Split a tile-id range into consecutive passes of at most pass_tiles tiles.

    Buffer sizes are exact per-pass cell counts (ragged edge tiles and
    diagonal tiles accounted), so peak result memory is bounded by
    pass_tiles * q * q records regardless of m.
    """
    if pass_tiles < 1:
        raise ConfigError(f"pass_tiles must be positive, got {pass_tiles}")
    lo, hi = tile_range
    plans: list[PassPlan] = []
    start = lo
    while start < hi:
        stop = min(start + pass_tiles, hi)
        cells = 0
        for t in range(start, stop):
            y, x = tile_coord(t, space.w)
            cells += space.tile_cell_count(y, x)
        plans.append(PassPlan(len(plans), start, stop, cells))
        start = stop
    return plans


@njit(cache=True, nogil=True)
def _tiles_naive(ranks, row0, col0, offs, first, step, m, q, oi, oj, onum, ond, on1, on2, on3):
    for t in range(first, row0.shape[0], step):
        r0 = row0[t]
        c0 = col0[t]
        r1 = min(r0 + q, m)
        c1 = min(c0 + q, m)
        k = offs[t]
        for i in range(r0, r1):
            j0 = i if i > c0 else c0
            for j in range(j0, c1):
                oi[k] = i
                oj[k] = j
                onum[k] = naive_numerator(ranks[i], ranks[j])
                ond[k] = 0
                on1[k] = 0
                on2[k] = 0
                on3[k] = 0
                k += 1


@njit(cache=True, nogil=True)
def _tiles_sorted(ranks, row0, col0, offs, first, step, m, q, oi, oj, onum, ond, on1, on2, on3,
                  wu, wv, su, sv):
    n = ranks.shape[1]
    n0 = np.int64(n) * np.int64(n - 1) // 2
    for t in range(first, row0.shape[0], step):
        r0 = row0[t]
        c0 = col0[t]
        r1 = min(r0 + q, m)
        c1 = min(c0 + q, m)
        k = offs[t]
        for i in range(r0, r1):
            j0 = i if i > c0 else c0
            for j in range(j0, c1):
                nd, n1, n2, n3 = sorted_counts(ranks[i], ranks[j], wu, wv, su, sv)
                oi[k] = i
                oj[k] = j
                onum[k] = n0 - n1 - n2 + n3 - 2 * nd
                ond[k] = nd
                on1[k] = n1
                on2[k] = n2
                on3[k] = n3
                k += 1


@njit(cache=True, nogil=True)
def _tiles_vectorized(ranks, row0, col0, offs, first, step, m, q, oi, oj, onum, ond, on1, on2, on3,
                      pa, pb, va, vb):
    n = ranks.shape[1]
    n0 = np.int64(n) * np.int64(n - 1) // 2
    for t in range(first, row0.shape[0], step):
        r0 = row0[t]
        c0 = col0[t]
        r1 = min(r0 + q, m)
        c1 = min(c0 + q, m)
        k = offs[t]
        for i in range(r0, r1):
            j0 = i if i > c0 else c0
            for j in range(j0, c1):
                nd, n1, n2, n3 = vectorized_counts(ranks[i], ranks[j], pa, pb, va, vb, True)
                oi[k] = i
                oj[k] = j
                onum[k] = n0 - n1 - n2 + n3 - 2 * nd
                ond[k] = nd
                on1[k] = n1
                on2[k] = n2
                on3[k] = n3
                k += 1


_WORKERS = {
    "naive": _tiles_naive,
    "sorted": _tiles_sorted,
    "vectorized": _tiles_vectorized,
}


def _make_scratch(kernel: str, n: int) -> tuple:
    if kernel == "naive":
        return ()
    if kernel == "sorted":
        return tuple(np.empty(n, np.int32) for _ in range(4))
    return (
        np.empty(n, np.int32),
        np.empty(n, np.int32),
        np.empty(LANE_WIDTH, np.int32),
        np.empty(LANE_WIDTH, np.int32),
    )


def _pass_geometry(space: JobSpace, plan: PassPlan):
    """Per-tile block origins and exclusive-prefix buffer offsets for one pass."""
    nt = plan.tile_hi - plan.tile_lo
    row0 = np.empty(nt, np.int64)
    col0 = np.empty(nt, np.int64)
    offs = np.empty(nt, np.int64)
    off = 0
    for idx in range(nt):
        y, x = tile_coord(plan.tile_lo + idx, space.w)
        row0[idx] = y * space.q
        col0[idx] = x * space.q
        offs[idx] = off
        off += space.tile_cell_count(y, x)
    if off != plan.cells:
        raise RuntimeError("pass geometry does not match planned cell count")
    return row0, col0, offs


class _Writer:
    """Background sink call for one pass buffer; join() re-raises its error."""

    def __init__(self, sink, records):
        self._exc: BaseException | None = None

        def run():
            try:
                sink(records)
            except BaseException as exc:  # noqa: BLE001 - must cross the thread
                self._exc = exc

        self._thread = threading.Thread(target=run, name="taucorr-writer")
        self._thread.start()

    def join(self, suppress: bool = False):
        self._thread.join()
        if self._exc is not None and not suppress:
            raise self._exc


def compute_all_pairs(
    ds: Dataset,
    kernel: str = "sorted",
    *,
    workers: int = 1,
    tile_size: int = 8,
    pass_tiles: int = 4096,
    shard: tuple[int, int] | None = None,
    sink=None,
    overlap: bool = True,
) -> RunSummary:
    """Compute every upper-triangle cell of the (sharded) pair matrix once.

    Results are delivered to ``sink`` pass by pass, in ascending tile-id
    order and within a tile in tile_cells order, as views of a structured
    CELL_DTYPE array.  The sink must consume (or copy) the view before
    returning: the buffer is recycled.  Output is bit-identical for any
    worker count and with overlap on or off.

    When the vectorized kernel is requested but the dataset exceeds the
    15-bit packing budget, the whole run degrades to the merge-sort kernel
    (never per cell), with a logged warning.
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}, expected one of {KERNELS}")
    if workers < 1:
        raise ConfigError(f"workers must be positive, got {workers}")
    if tile_size < 1:
        raise ConfigError(f"tile_size must be positive, got {tile_size}")
    if pass_tiles < 1:
        raise ConfigError(f"pass_tiles must be positive, got {pass_tiles}")
    if shard is not None:
        si, sp = shard
        if sp < 1 or not 0 <= si < sp:
            raise ConfigError(f"invalid shard {si}/{sp}")
    if ds.n < 2:
        raise InvalidInputError("need at least two observations per variable")

    requested = kernel
    if kernel == "vectorized" and not ds.packed_ready:
        logger.warning(
            "dataset exceeds the packed-kernel capacity (n=%d, max rank %d); "
            "falling back to the merge-sort kernel for this run",
            ds.n,
            int(ds.ranks.max()),
        )
        kernel = "sorted"

    space = JobSpace(ds.m, tile_size)
    tile_range = (0, space.total_tiles) if shard is None else shard_range(shard[0], shard[1], space)
    plans = plan_passes(space, tile_range, pass_tiles)

    worker_fn = _WORKERS[kernel]
    scratches = [_make_scratch(kernel, ds.n) for _ in range(workers)]
    use_overlap = overlap and sink is not None and len(plans) > 1
    nbuf = 2 if use_overlap else 1
    max_cells = max((plan.cells for plan in plans), default=0)
    bufs = [np.zeros(max_cells, CELL_DTYPE) for _ in range(nbuf)]

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    writer: _Writer | None = None
    stats: list[PassStats] = []
    t_run = time.perf_counter()
    try:
        for plan in plans:
            buf = bufs[plan.pass_index % nbuf]
            view = buf[: plan.cells]
            row0, col0, offs = _pass_geometry(space, plan)
            fields = (
                view["i"],
                view["j"],
                view["numerator"],
                view["n_d"],
                view["n1"],
                view["n2"],
                view["n3"],
            )
            t0 = time.perf_counter()
            if pool is not None:
                futures = [
                    pool.submit(
                        worker_fn,
                        ds.ranks,
                        row0,
                        col0,
                        offs,
                        widx,
                        workers,
                        space.m,
                        space.q,
                        *fields,
                        *scratches[widx],
                    )
                    for widx in range(workers)
                ]
                for fut in futures:
                    fut.result()
            else:
                worker_fn(
                    ds.ranks, row0, col0, offs, 0, 1, space.m, space.q, *fields, *scratches[0]
                )
            compute_s = time.perf_counter() - t0
            write_s = 0.0
            if sink is not None:
                t1 = time.perf_counter()
                if use_overlap:
                    if writer is not None:
                        writer.join()
                    writer = _Writer(sink, view)
                else:
                    sink(view)
                write_s = time.perf_counter() - t1
            stats.append(
                PassStats(plan.pass_index, plan.tile_hi - plan.tile_lo, plan.cells, compute_s, write_s)
            )
        if writer is not None:
            writer.join()
            writer = None
    finally:
        if writer is not None:
            writer.join(suppress=True)
        if pool is not None:
            pool.shutdown(wait=True)

    return RunSummary(
        kernel=kernel,
        requested_kernel=requested,
        workers=workers,
        tile_size=tile_size,
        pass_tiles=pass_tiles,
        shard=shard,
        total_tiles=tile_range[1] - tile_range[0],
        total_cells=sum(plan.cells for plan in plans),
        elapsed_seconds=time.perf_counter() - t_run,
        buffer_bytes=sum(buf.nbytes for buf in bufs),
        passes=stats,
    )


def cell_results(records: np.ndarray, n: int, kernel: str = "sorted"):
    """Unpack flat CELL_DTYPE records into CellResult objects.

    ``n`` is the observation count of the run (needed to derive tau values);
    pass kernel="naive" for records of a quadratic-kernel run, whose tau_b
    is undefined.
    """
    n0 = n * (n - 1) // 2
    tau_a, tau_b = derive_taus(
        records["numerator"], records["n1"], records["n2"], n, tau_b_valid=kernel != "naive"
    )
    for idx in range(records.shape[0]):
        rec = records[idx]
        yield CellResult(
            i=int(rec["i"]),
            j=int(rec["j"]),
            result=TauResult(
                numerator=int(rec["numerator"]),
                n_d=int(rec["n_d"]),
                n1=int(rec["n1"]),
                n2=int(rec["n2"]),
                n3=int(rec["n3"]),
                n0=n0,
                tau_a=float(tau_a[idx]),
                tau_b=float(tau_b[idx]),
                defined_b=not np.isnan(tau_b[idx]),
            ),
        )

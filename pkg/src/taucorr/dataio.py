"""Matrix ingestion, result output, and synthetic dataset generation.

Text output is one TSV line per upper-triangle cell:

    label_i <TAB> label_j <TAB> tau_b <TAB> tau_a <TAB> n_d <TAB> n1 <TAB> n2 <TAB> n3

Binary output is the raw CELL_DTYPE record stream (48 bytes per cell,
little-endian: two uint32 indices, one int64 numerator, four uint64
counts).  Integer counts are the authoritative values in both formats;
readers recompute tau from them.  An undefined tau_b (constant vector, or
a tau-a-only run) is written as the literal ``nan`` in text mode and as an
all-ones sentinel in the binary n_d field -- legitimate n_d values cannot
be all-ones, and whenever tau_b is undefined the true n_d is necessarily
zero (no pair can disagree in both coordinates when one vector is
constant), so the reader loses nothing.

Records appear in ascending tile-id order, within a tile in tile_cells
iteration order.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import CELL_DTYPE, Dataset
from .errors import InvalidInputError, ParseError
from .ranks import rank_transform
from .result import derive_taus

ND_SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)


def _fmt(x: float) -> str:
    """Shortest round-trip float formatting; NaN prints as 'nan'."""
    return repr(float(x))


def render_tsv_lines(records: np.ndarray, labels, n: int, tau_b_valid: bool = True):
    """Yield one TSV line per record, deriving tau values from the counts."""
    tau_a, tau_b = derive_taus(records["numerator"], records["n1"], records["n2"], n, tau_b_valid)
    ii = records["i"]
    jj = records["j"]
    nd = records["n_d"]
    n1 = records["n1"]
    n2 = records["n2"]
    n3 = records["n3"]
    for k in range(records.shape[0]):
        yield (
            f"{labels[ii[k]]}\t{labels[jj[k]]}\t{_fmt(tau_b[k])}\t{_fmt(tau_a[k])}"
            f"\t{nd[k]}\t{n1[k]}\t{n2[k]}\t{n3[k]}\n"
        )


class TsvWriter:
    """Engine sink writing TSV lines to a text stream."""

    def __init__(self, stream, labels, n: int, kernel: str = "sorted", skip_diagonal: bool = False):
        self._stream = stream
        self._labels = list(labels)
        self._n = n
        self._tau_b_valid = kernel != "naive"
        self._skip_diagonal = skip_diagonal

    def __call__(self, records: np.ndarray) -> None:
        if self._skip_diagonal:
            records = records[records["i"] != records["j"]]
        self._stream.write(
            "".join(render_tsv_lines(records, self._labels, self._n, self._tau_b_valid))
        )


class BinaryWriter:
    """Engine sink writing raw CELL_DTYPE records to a binary stream."""

    def __init__(self, stream, n: int, kernel: str = "sorted", skip_diagonal: bool = False):
        self._stream = stream
        self._n = n
        self._tau_b_valid = kernel != "naive"
        self._skip_diagonal = skip_diagonal

    def __call__(self, records: np.ndarray) -> None:
        if self._skip_diagonal:
            records = records[records["i"] != records["j"]]
        out = records.copy()
        n0 = self._n * (self._n - 1) // 2
        if self._tau_b_valid:
            undefined = (out["n1"] >= n0) | (out["n2"] >= n0)
        else:
            undefined = np.ones(out.shape[0], dtype=bool)
        out["n_d"][undefined] = ND_SENTINEL
        self._stream.write(out.tobytes())


def read_binary(source, n: int):
    """Parse a binary record stream back into records plus derived taus.

    ``source`` is a path or a binary file object; ``n`` is the observation
    count of the run that produced the file.  Returns
    (records, tau_a, tau_b): sentinel n_d fields are restored to their true
    value of zero and the matching tau_b entries are NaN.
    """
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    if len(raw) % CELL_DTYPE.itemsize:
        raise ParseError(
            f"binary stream length {len(raw)} is not a multiple of {CELL_DTYPE.itemsize}"
        )
    records = np.frombuffer(raw, dtype=CELL_DTYPE).copy()
    undefined = records["n_d"] == ND_SENTINEL
    records["n_d"][undefined] = 0
    tau_a, tau_b = derive_taus(records["numerator"], records["n1"], records["n2"], n)
    tau_b = np.where(undefined, np.nan, tau_b)
    return records, tau_a, tau_b


def load_matrix(
    path,
    *,
    transpose: bool = False,
    has_header: bool = True,
    delimiter: str = "\t",
) -> Dataset:
    """Load a labeled numeric matrix and rank-transform every variable.

    Layout: optional first row of sample labels, first column of variable
    labels, remaining cells numeric.  With transpose=True the roles of rows
    and columns are swapped before ranking (variables become the columns of
    the file, e.g. to correlate samples instead of genes).

    Raises ParseError (with the line number) on ragged rows, non-numeric
    cells or duplicate labels, and InvalidInputError on an empty matrix.
    """
    with open(path, "rt", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    header: list[str] | None = None
    row_labels: list[str] = []
    rows: list[list[float]] = []
    width = -1
    first_data_line = True
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = line.split(delimiter)
        if has_header and header is None:
            header = [c.strip() for c in cells]
            continue
        label = cells[0].strip()
        values = cells[1:]
        if first_data_line:
            width = len(values)
            if width == 0:
                raise ParseError(f"line {lineno}: no data columns")
            first_data_line = False
        elif len(values) != width:
            raise ParseError(
                f"line {lineno}: expected {width} data columns, found {len(values)}"
            )
        parsed = []
        for col, cell in enumerate(values, start=2):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric value {cell.strip()!r} in column {col}") from None
            if math.isnan(value):
                raise ParseError(f"line {lineno}: NaN value in column {col}")
            parsed.append(value)
        row_labels.append(label)
        rows.append(parsed)

    if not rows:
        raise InvalidInputError(f"{path}: empty matrix")
    data = np.asarray(rows, dtype=np.float64)

    if transpose:
        data = data.T
        if header is not None:
            labels = header[-data.shape[0]:]
        else:
            labels = [f"S{k}" for k in range(data.shape[0])]
    else:
        labels = row_labels
    if len(labels) != data.shape[0]:
        raise ParseError(f"{path}: {len(labels)} labels for {data.shape[0]} variables")
    if len(set(labels)) != len(labels):
        dupes = sorted({s for s in labels if labels.count(s) > 1})
        raise ParseError(f"{path}: duplicate variable labels {dupes}")

    ranks = np.empty(data.shape, dtype=np.int32)
    for row in range(data.shape[0]):
        ranks[row] = rank_transform(data[row])
    return Dataset(labels=list(labels), ranks=ranks)


def synth_dataset(m: int, n: int, tie_fraction: float = 0.0, seed: int = 0) -> Dataset:
    """Deterministic pseudorandom dataset for tests and benchmarks.

    Each variable's n observations draw from ceil(n * (1 - tie_fraction))
    distinct values (at least one), already in dense-rank form:
    tie_fraction=0 gives n distinct ranks per vector, tie_fraction=1 gives
    constant vectors.  The same seed always produces the same dataset.
    """
    if m < 1 or n < 1:
        raise InvalidInputError(f"dataset shape must be positive, got m={m}, n={n}")
    if not 0.0 <= tie_fraction <= 1.0:
        raise InvalidInputError(f"tie_fraction must be in [0, 1], got {tie_fraction}")
    rng = np.random.default_rng(seed)
    distinct = max(1, math.ceil(n * (1.0 - tie_fraction)))
    base = np.arange(n, dtype=np.int32) % distinct
    ranks = np.empty((m, n), dtype=np.int32)
    for row in range(m):
        ranks[row] = rng.permutation(base)
    labels = [f"V{k}" for k in range(m)]
    return Dataset(labels=labels, ranks=ranks)

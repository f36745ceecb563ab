"""Command-line interface and benchmark harness."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
import time

from .dataio import BinaryWriter, TsvWriter, load_matrix, synth_dataset
from .engine import KERNELS, compute_all_pairs
from .errors import TauCorrError

logger = logging.getLogger("taucorr")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="taucorr",
        description="All-pairs Kendall tau-a/tau-b over the variables of a numeric matrix.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="PATH", help="delimiter-separated matrix file")
    src.add_argument(
        "--synth",
        nargs=2,
        type=int,
        metavar=("M", "N"),
        help="generate a synthetic M x N dataset instead of reading a file",
    )
    p.add_argument("--tie-fraction", type=float, default=0.0,
                   help="tie density of the synthetic dataset (default 0)")
    p.add_argument("--seed", type=int, default=0, help="seed of the synthetic dataset")
    p.add_argument("--kernel", choices=list(KERNELS), default="sorted",
                   help="pairwise kernel (default sorted)")
    p.add_argument("--threads", type=int, default=1, help="worker count (default 1)")
    p.add_argument("--tile-size", type=int, default=8,
                   help="tile width q (default 8; 4 suits wide-vector profiles)")
    p.add_argument("--pass-tiles", type=int, default=4096,
                   help="tiles per execution pass (bounds result-buffer memory)")
    p.add_argument("--transpose", action="store_true",
                   help="swap matrix rows and columns before ranking")
    p.add_argument("--no-header", action="store_true",
                   help="the input file has no sample-label header row")
    p.add_argument("--delimiter", default="\t", help="input field delimiter (default tab)")
    p.add_argument("--shard", metavar="I/P",
                   help="compute only shard I of P (contiguous tile-id slice)")
    p.add_argument("--output", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=["tsv", "bin"], default="tsv", help="output format")
    p.add_argument("--no-overlap", action="store_true",
                   help="disable compute/write double buffering")
    p.add_argument("--skip-diagonal", action="store_true",
                   help="omit self-correlation cells from the output")
    p.add_argument("--bench", action="store_true",
                   help="time every kernel on the dataset and print a table instead of results")
    return p


def _parse_shard(text: str, parser: argparse.ArgumentParser):
    try:
        i_s, p_s = text.split("/", 1)
        i, p = int(i_s), int(p_s)
    except ValueError:
        parser.error(f"--shard expects I/P, got {text!r}")
    if p < 1 or not 0 <= i < p:
        parser.error(f"--shard index {i} out of range for {p} shards")
    return i, p


def _load_dataset(args):
    if args.synth is not None:
        m, n = args.synth
        return synth_dataset(m, n, tie_fraction=args.tie_fraction, seed=args.seed)
    return load_matrix(
        args.input,
        transpose=args.transpose,
        has_header=not args.no_header,
        delimiter=args.delimiter,
    )


def _run_bench(ds, args) -> int:
    kernels = [k for k in KERNELS if k != "vectorized" or ds.packed_ready]
    print(f"# bench: m={ds.m} n={ds.n} threads={args.threads} tile={args.tile_size}")
    print(f"{'kernel':<12}{'seconds':>12}{'cells/s':>16}{'speedup':>10}")
    base = None
    for kernel in kernels:
        t0 = time.perf_counter()
        summary = compute_all_pairs(
            ds,
            kernel,
            workers=args.threads,
            tile_size=args.tile_size,
            pass_tiles=args.pass_tiles,
            sink=None,
            overlap=not args.no_overlap,
        )
        elapsed = time.perf_counter() - t0
        if base is None:
            base = elapsed
        print(
            f"{kernel:<12}{elapsed:>12.4f}{summary.total_cells / elapsed:>16.0f}"
            f"{base / elapsed:>10.2f}"
        )
    return 0


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    shard = _parse_shard(args.shard, parser) if args.shard else None
    if args.synth is None and (args.tie_fraction != 0.0 or args.seed != 0):
        parser.error("--tie-fraction/--seed only apply to --synth")

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        ds = _load_dataset(args)
        if args.bench:
            return _run_bench(ds, args)

        with contextlib.ExitStack() as stack:
            if args.format == "tsv":
                stream = (
                    stack.enter_context(open(args.output, "w", encoding="utf-8"))
                    if args.output
                    else sys.stdout
                )
                sink = TsvWriter(stream, ds.labels, ds.n, kernel=args.kernel,
                                 skip_diagonal=args.skip_diagonal)
            else:
                stream = (
                    stack.enter_context(open(args.output, "wb"))
                    if args.output
                    else sys.stdout.buffer
                )
                sink = BinaryWriter(stream, ds.n, kernel=args.kernel,
                                    skip_diagonal=args.skip_diagonal)
            summary = compute_all_pairs(
                ds,
                args.kernel,
                workers=args.threads,
                tile_size=args.tile_size,
                pass_tiles=args.pass_tiles,
                shard=shard,
                sink=sink,
                overlap=not args.no_overlap,
            )
        logger.info(
            "%d cells in %.3fs (%.0f cells/s, kernel=%s, %d passes)",
            summary.total_cells,
            summary.elapsed_seconds,
            summary.cells_per_second,
            summary.kernel,
            len(summary.passes),
        )
        return 0
    except TauCorrError as exc:
        print(f"taucorr: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"taucorr: i/o error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

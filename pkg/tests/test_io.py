import io
import math
import tracemalloc

import numpy as np
import pytest

from taucorr import (
    BinaryWriter,
    CELL_DTYPE,
    InvalidInputError,
    ParseError,
    TsvWriter,
    compute_all_pairs,
    load_matrix,
    read_binary,
    render_tsv_lines,
    run_cli,
    synth_dataset,
)


def write(tmp_path, text, name="m.tsv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadMatrix:
    def test_basic_shape(self, tmp_path):
        path = write(tmp_path, "id\ts1\ts2\ng1\t1.0\t2.0\ng2\t2.0\t1.0\ng3\t0.5\t0.5\n")
        ds = load_matrix(path)
        assert (ds.m, ds.n) == (3, 2)
        assert ds.labels == ["g1", "g2", "g3"]
        # ranks are dense per variable
        assert ds.ranks[0].tolist() == [0, 1]
        assert ds.ranks[2].tolist() == [0, 0]

    def test_transpose_swaps_roles(self, tmp_path):
        path = write(tmp_path, "id\ts1\ts2\ng1\t1.0\t2.0\ng2\t2.0\t1.0\ng3\t0.5\t0.5\n")
        ds = load_matrix(path, transpose=True)
        assert (ds.m, ds.n) == (2, 3)
        assert ds.labels == ["s1", "s2"]

    def test_no_header(self, tmp_path):
        path = write(tmp_path, "g1\t1\t2\ng2\t3\t4\n")
        ds = load_matrix(path, has_header=False)
        assert (ds.m, ds.n) == (2, 2)

    def test_non_numeric_cell_cites_line(self, tmp_path):
        path = write(tmp_path, "id\ts1\ng1\t1.0\ng2\t2.0\ng3\t1.0\ng4\toops\n")
        with pytest.raises(ParseError, match="line 5"):
            load_matrix(path)

    def test_ragged_row_cites_line(self, tmp_path):
        path = write(tmp_path, "id\ts1\ts2\ng1\t1\t2\ng2\t3\n")
        with pytest.raises(ParseError, match="line 3"):
            load_matrix(path)

    def test_duplicate_labels(self, tmp_path):
        path = write(tmp_path, "id\ts1\ng1\t1\ng1\t2\n")
        with pytest.raises(ParseError, match="duplicate"):
            load_matrix(path)

    def test_nan_cell_rejected(self, tmp_path):
        path = write(tmp_path, "id\ts1\ts2\ng1\t1\tnan\n")
        with pytest.raises(ParseError, match="line 2"):
            load_matrix(path)

    def test_empty_matrix(self, tmp_path):
        path = write(tmp_path, "id\ts1\n")
        with pytest.raises(InvalidInputError):
            load_matrix(path)

    def test_comma_delimiter(self, tmp_path):
        path = write(tmp_path, "id,s1,s2\ng1,1,2\ng2,2,1\n")
        ds = load_matrix(path, delimiter=",")
        assert (ds.m, ds.n) == (2, 2)


class TestSynthDataset:
    def test_tie_free_has_distinct_ranks(self):
        ds = synth_dataset(5, 40, tie_fraction=0.0, seed=1)
        for row in ds.ranks:
            assert len(set(row.tolist())) == 40

    def test_fully_tied_is_constant(self):
        ds = synth_dataset(4, 12, tie_fraction=1.0, seed=2)
        for row in ds.ranks:
            assert len(set(row.tolist())) == 1

    def test_tie_fraction_sets_distinct_count(self):
        ds = synth_dataset(3, 100, tie_fraction=0.3, seed=3)
        for row in ds.ranks:
            assert len(set(row.tolist())) == math.ceil(100 * 0.7)

    def test_seed_determinism(self):
        a = synth_dataset(6, 30, tie_fraction=0.5, seed=9)
        b = synth_dataset(6, 30, tie_fraction=0.5, seed=9)
        assert np.array_equal(a.ranks, b.ranks)
        c = synth_dataset(6, 30, tie_fraction=0.5, seed=10)
        assert not np.array_equal(a.ranks, c.ranks)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            synth_dataset(0, 5)
        with pytest.raises(InvalidInputError):
            synth_dataset(5, 5, tie_fraction=1.5)


class TestWritersAndReaders:
    def run_both(self, ds, kernel="sorted", skip_diagonal=False):
        text = io.StringIO()
        compute_all_pairs(
            ds, kernel, sink=TsvWriter(text, ds.labels, ds.n, kernel, skip_diagonal)
        )
        blob = io.BytesIO()
        compute_all_pairs(ds, kernel, sink=BinaryWriter(blob, ds.n, kernel, skip_diagonal))
        return text.getvalue(), blob.getvalue()

    def test_tsv_layout(self):
        ds = synth_dataset(3, 6, seed=4)
        text, _ = self.run_both(ds)
        lines = text.splitlines()
        assert len(lines) == 6
        first = lines[0].split("\t")
        assert first[0] == "V0" and first[1] == "V0"
        assert float(first[2]) == 1.0 and float(first[3]) == 1.0  # self correlation
        assert len(first) == 8

    def test_binary_roundtrip_reproduces_tsv(self):
        ds = synth_dataset(8, 15, tie_fraction=0.4, seed=5)
        text, blob = self.run_both(ds)
        records, tau_a, tau_b = read_binary(io.BytesIO(blob), ds.n)
        rendered = "".join(render_tsv_lines(records, ds.labels, ds.n))
        assert rendered == text
        # tau recomputation is exact against a float re-derivation
        n0 = ds.n * (ds.n - 1) // 2
        for k in range(records.shape[0]):
            expect = records["numerator"][k] / n0
            assert math.isclose(tau_a[k], expect, rel_tol=1e-15)

    def test_constant_vector_writes_nan_and_sentinel(self):
        ds = synth_dataset(2, 10, tie_fraction=1.0, seed=6)
        text, blob = self.run_both(ds)
        for line in text.splitlines():
            assert line.split("\t")[2] == "nan"
        raw = np.frombuffer(blob, dtype=CELL_DTYPE)
        assert (raw["n_d"] == np.uint64(0xFFFFFFFFFFFFFFFF)).all()
        records, _, tau_b = read_binary(io.BytesIO(blob), ds.n)
        assert (records["n_d"] == 0).all()
        assert np.isnan(tau_b).all()

    def test_naive_kernel_tau_b_is_nan(self):
        ds = synth_dataset(3, 8, seed=7)
        text, blob = self.run_both(ds, kernel="naive")
        for line in text.splitlines():
            assert line.split("\t")[2] == "nan"
        records, _, tau_b = read_binary(io.BytesIO(blob), ds.n)
        assert np.isnan(tau_b).all()
        rendered = "".join(render_tsv_lines(records, ds.labels, ds.n, tau_b_valid=False))
        assert rendered == text

    def test_skip_diagonal(self):
        ds = synth_dataset(4, 6, seed=8)
        text, blob = self.run_both(ds, skip_diagonal=True)
        assert len(text.splitlines()) == 4 * 3 // 2
        records, _, _ = read_binary(io.BytesIO(blob), ds.n)
        assert (records["i"] != records["j"]).all()

    def test_symmetric_completion(self):
        ds = synth_dataset(6, 12, tie_fraction=0.2, seed=9)
        _, blob = self.run_both(ds)
        records, _, tau_b = read_binary(io.BytesIO(blob), ds.n)
        full = np.full((6, 6), np.nan)
        for k in range(records.shape[0]):
            i, j = int(records["i"][k]), int(records["j"][k])
            full[i, j] = tau_b[k]
            full[j, i] = tau_b[k]
        assert np.allclose(full, full.T, equal_nan=True)
        assert np.allclose(np.diag(full), 1.0)

    def test_truncated_binary_rejected(self):
        with pytest.raises(ParseError):
            read_binary(io.BytesIO(b"\x00" * 17), 4)


class TestCli:
    def test_tsv_run(self, tmp_path, capsys):
        src = write(tmp_path, "id\ts1\ts2\ts3\ng1\t1\t2\t3\ng2\t3\t2\t1\ng3\t1\t3\t2\n")
        out = tmp_path / "out.tsv"
        code = run_cli(["--input", str(src), "--kernel", "sorted", "--output", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 6
        assert lines[0].startswith("g1\tg1\t1.0")

    def test_binary_run_parses_back(self, tmp_path):
        src = write(tmp_path, "id\ts1\ts2\ts3\ng1\t1\t2\t3\ng2\t3\t2\t1\n")
        out = tmp_path / "out.bin"
        code = run_cli(["--input", str(src), "--format", "bin", "--output", str(out)])
        assert code == 0
        records, _, tau_b = read_binary(out, 3)
        assert records.shape[0] == 3
        assert tau_b[1] == -1.0  # g1 vs g2 is a full reversal

    def test_shards_concatenate(self, tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"part{i}.tsv"
            code = run_cli(
                ["--synth", "9", "8", "--seed", "3", "--tile-size", "2",
                 "--shard", f"{i}/2", "--output", str(out)]
            )
            assert code == 0
            outs.append(out.read_text())
        whole = tmp_path / "whole.tsv"
        assert run_cli(["--synth", "9", "8", "--seed", "3", "--tile-size", "2",
                        "--output", str(whole)]) == 0
        assert "".join(outs) == whole.read_text()

    def test_bench_table(self, capsys):
        code = run_cli(["--synth", "24", "32", "--bench"])
        assert code == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert lines[0].split()[:3] == ["kernel", "seconds", "cells/s"]
        assert [l.split()[0] for l in lines[1:]] == ["naive", "sorted", "vectorized"]

    def test_usage_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli([])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run_cli(["--input", "x", "--synth", "3", "4"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run_cli(["--synth", "3", "4", "--shard", "2/2"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run_cli(["--input", "x", "--tie-fraction", "0.5"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            run_cli(["--synth", "3", "4", "--no-such-flag"])
        assert exc.value.code == 2

    def test_missing_file_is_diagnosed(self, tmp_path, capsys):
        code = run_cli(["--input", str(tmp_path / "nope.tsv")])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestStreamingMemory:
    def test_output_memory_bounded_by_pass_buffer(self):
        # m=4096 upper triangle is ~8.4e6 cells = ~400 MB of records; with
        # bounded passes the run must stay far below that
        ds = synth_dataset(4096, 8, tie_fraction=0.0, seed=13)
        written = []

        def counting_sink(records):
            written.append(records.shape[0])

        tracemalloc.start()
        tracemalloc.reset_peak()
        summary = compute_all_pairs(
            ds, "naive", workers=2, tile_size=8, pass_tiles=4096, sink=counting_sink
        )
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        total_cells = 4096 * 4097 // 2
        assert sum(written) == total_cells == summary.total_cells
        full_bytes = total_cells * CELL_DTYPE.itemsize
        assert summary.buffer_bytes <= 2 * 4096 * 8 * 8 * CELL_DTYPE.itemsize
        # traced peak stays an order of magnitude below the full matrix
        assert peak < full_bytes / 5

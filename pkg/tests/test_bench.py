import csv
import json

import numpy as np
import pytest

from viskern import counters
from viskern.bench import (
    BenchConfig,
    BenchRecord,
    CSV_HEADER,
    compute_speedup,
    emit_csv,
    emit_json,
    hash_output,
    make_synthetic,
    resolve_field,
    run_suite,
)
from viskern.cli import main as cli_main
from viskern.field import Dims
from viskern.io import save_field


@pytest.fixture(autouse=True)
def software_counters():
    counters.set_backend_mode("SOFTWARE")
    yield
    counters.set_backend_mode("AUTO")


def small_stencil_config(**over):
    base = dict(kernel="stencil", strategies=("direct", "field_map"),
                thread_counts=(1, 2), repetitions=2, synthetic="random2d:48x40",
                radius=5, warmup=False)
    base.update(over)
    return BenchConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(kernel="fft", strategies=("direct",))
    with pytest.raises(ValueError):
        BenchConfig(kernel="stencil", strategies=("bogus",))
    with pytest.raises(ValueError):
        small_stencil_config(thread_counts=(4, 2))
    with pytest.raises(ValueError):
        small_stencil_config(thread_counts=())
    with pytest.raises(ValueError):
        small_stencil_config(repetitions=0)
    with pytest.raises(ValueError):
        small_stencil_config(radius=4)


def test_make_synthetic_shapes():
    img = make_synthetic("random2d:16x12")
    assert img.dims == Dims(16, 12, 1)
    sph = make_synthetic("sphere3d:8")
    assert sph.dims == Dims(8, 8, 8)
    rot = make_synthetic("rotational3d:4x6x8")
    assert rot.dims == Dims(4, 6, 8) and rot.components == 3
    imp = make_synthetic("impulse2d:9x9")
    assert imp.values.sum() == 1.0
    with pytest.raises(ValueError):
        make_synthetic("mystery:4")
    with pytest.raises(ValueError):
        make_synthetic("random2d")
    with pytest.raises(ValueError):
        make_synthetic("random2d:4")


def test_resolve_field_dataset_roundtrip(tmp_path):
    f = make_synthetic("sphere3d:6")
    path = save_field(f, tmp_path / "d.json")
    config = BenchConfig(kernel="isocontour", strategies=("serial",),
                         dataset=str(path))
    loaded = resolve_field(config)
    assert np.array_equal(loaded.values, f.values)
    with pytest.raises(ValueError):
        resolve_field(BenchConfig(kernel="stencil", strategies=("direct",),
                                  dataset="x", synthetic="random2d:4x4"))


def test_run_suite_record_count_and_hashes():
    records = run_suite(small_stencil_config(thread_counts=(1, 2, 4)))
    # 2 strategies x 3 thread counts x 2 reps
    assert len(records) == 12
    assert len({r.output_hash for r in records}) == 1
    for r in records:
        assert r.runtime_s > 0
        assert r.flops_scalar > 0
        assert r.cpi is None  # software backend has no cycle counter


def test_run_suite_serial_strategy_recorded_once():
    config = BenchConfig(kernel="isocontour", strategies=("serial", "dpp"),
                         thread_counts=(1, 2), repetitions=2,
                         synthetic="sphere3d:10", warmup=False)
    records = run_suite(config)
    serial = [r for r in records if r.strategy == "serial"]
    dpp = [r for r in records if r.strategy == "dpp"]
    assert len(serial) == 2  # reps only, threads pinned to 1
    assert all(r.threads == 1 for r in serial)
    assert len(dpp) == 4
    assert len({r.output_hash for r in records}) == 1


def test_run_suite_advection_bitwise_cells():
    config = BenchConfig(kernel="advection", strategies=("serial", "parallel"),
                         thread_counts=(1, 2), repetitions=1, n_seeds=16,
                         max_steps=50, synthetic="rotational3d:12", warmup=False)
    records = run_suite(config)
    assert len({r.output_hash for r in records}) == 1


def test_compute_speedup_median_example():
    def rec(threads, rep, runtime):
        return BenchRecord(kernel="stencil", strategy="direct", threads=threads,
                           rep=rep, runtime_s=runtime)

    records = [rec(1, 0, 4.0), rec(1, 1, 4.2), rec(1, 2, 3.8),
               rec(2, 0, 2.0), rec(2, 1, 2.2), rec(2, 2, 9.9)]
    out = compute_speedup(records)
    t1 = [r for r in out if r.threads == 1]
    t2 = [r for r in out if r.threads == 2]
    assert all(r.speedup == 1.0 for r in t1)
    assert all(r.speedup == pytest.approx(4.0 / 2.2) for r in t2)


def test_compute_speedup_simple_ratio_and_missing_baseline():
    def rec(threads, runtime):
        return BenchRecord(kernel="stencil", strategy="direct", threads=threads,
                           rep=0, runtime_s=runtime)

    out = compute_speedup([rec(1, 8.0), rec(4, 2.0)])
    assert [r.speedup for r in out] == [1.0, 4.0]
    with pytest.raises(ValueError):
        compute_speedup([rec(2, 1.0)])


def test_csv_schema_and_na(tmp_path):
    records = [BenchRecord(kernel="stencil", strategy="direct", threads=1,
                           rep=0, runtime_s=0.5, flops_scalar=100,
                           flops_packed=0, vectorization_pct=0.0, speedup=1.0)]
    path = tmp_path / "r.csv"
    emit_csv(records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2
    row = lines[1].split(",")
    assert row[0] == "stencil"
    assert row[5] == "N/A"  # instructions unavailable
    assert row[13] == "N/A"  # l3 miss ratio unavailable
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "empty.csv")


def test_csv_roundtrip_numeric_fields(tmp_path):
    records = run_suite(small_stencil_config(repetitions=1))
    path = tmp_path / "out.csv"
    emit_csv(records, path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(records)
    for row, rec in zip(rows, records):
        assert row["kernel"] == rec.kernel
        assert int(row["threads"]) == rec.threads
        assert float(row["runtime_s"]) == rec.runtime_s
        assert int(row["flops_scalar"]) == rec.flops_scalar
        assert float(row["speedup"]) == rec.speedup
        assert row["instructions"] == "N/A"


def test_json_mirrors_fields(tmp_path):
    records = run_suite(small_stencil_config(repetitions=1))
    path = tmp_path / "out.json"
    emit_json(records, path)
    rows = json.load(open(path))
    assert len(rows) == len(records)
    for row, rec in zip(rows, records):
        assert row["runtime_s"] == rec.runtime_s
        assert row["instructions"] is None
        assert row["flops_scalar"] == rec.flops_scalar


def test_hash_output_distinguishes_kernels():
    img = make_synthetic("random2d:8x8")
    a = hash_output("stencil", img)
    b = hash_output("stencil", make_synthetic("random2d:8x8", seed=1))
    assert a != b


def test_run_suite_rejects_divergent_outputs(monkeypatch):
    import itertools

    import viskern.bench as bench_mod

    tick = itertools.count()
    monkeypatch.setattr(bench_mod, "hash_output",
                        lambda kernel, out: f"h{next(tick)}")
    with pytest.raises(RuntimeError, match="disagree"):
        run_suite(small_stencil_config(repetitions=1))


def test_cli_reports_errors(tmp_path, capsys):
    rc = cli_main(["run", "--kernel", "stencil", "--synthetic", "nope:4x4",
                   "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_run_and_outputs(tmp_path, capsys):
    rc = cli_main(["run", "--kernel", "stencil", "--synthetic", "random2d:40x32",
                   "--radius", "5", "--strategy", "direct,field_map",
                   "--threads", "1,2", "--reps", "1", "--no-warmup",
                   "--out", str(tmp_path), "--emit", "csv,json,svg"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "direct" in out and "wrote" in out
    assert (tmp_path / "stencil.csv").exists()
    assert (tmp_path / "stencil.json").exists()
    assert (tmp_path / "stencil_runtime.svg").exists()
    assert (tmp_path / "stencil_speedup.svg").exists()


def test_cli_info(capsys):
    assert cli_main(["info"]) == 0
    out = capsys.readouterr().out
    assert "counter backend mode" in out


def test_cli_preset(tmp_path):
    # preset selects kernel and params; shrink the dataset to stay quick
    rc = cli_main(["run", "--preset", "advect-paper", "--synthetic",
                   "rotational3d:8", "--seeds", "8", "--steps", "20",
                   "--threads", "1,2", "--reps", "1", "--no-warmup",
                   "--out", str(tmp_path), "--emit", "csv"])
    assert rc == 0
    assert (tmp_path / "advection.csv").exists()

import pytest

from viskern.bench import BenchRecord, compute_speedup
from viskern.plots import emit_plots


def synthetic_records():
    records = []
    for strategy, base in (("direct", 8.0), ("field_map", 9.0)):
        for threads in (1, 2, 4):
            for rep in range(2):
                records.append(BenchRecord(
                    kernel="stencil", strategy=strategy, threads=threads,
                    rep=rep, runtime_s=base / threads + 0.01 * rep,
                    flops_scalar=1000, flops_packed=0))
    return compute_speedup(records)


def test_plots_written_per_kernel(tmp_path):
    paths = emit_plots(synthetic_records(), tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["stencil_runtime.svg", "stencil_speedup.svg"]
    for p in paths:
        assert p.stat().st_size > 0


def test_plots_byte_deterministic(tmp_path):
    records = synthetic_records()
    a = emit_plots(records, tmp_path / "a")
    b = emit_plots(records, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_speedup_chart_contains_ideal_line_and_series(tmp_path):
    paths = emit_plots(synthetic_records(), tmp_path)
    speedup_svg = [p for p in paths if "speedup" in p.name][0].read_text()
    assert "ideal" in speedup_svg
    assert "direct" in speedup_svg
    assert "field_map" in speedup_svg
    runtime_svg = [p for p in paths if "runtime" in p.name][0].read_text()
    # one legend entry per strategy
    assert "direct" in runtime_svg and "field_map" in runtime_svg


def test_plots_require_thread_sweep(tmp_path):
    records = [BenchRecord(kernel="stencil", strategy="direct", threads=1,
                           rep=0, runtime_s=1.0, speedup=1.0)]
    with pytest.raises(ValueError):
        emit_plots(records, tmp_path)


def test_plots_with_serial_only_strategy_mixed_in(tmp_path):
    # a serial strategy contributes a single point; the sweep still plots
    records = [BenchRecord(kernel="advection", strategy="serial", threads=1,
                           rep=0, runtime_s=4.0)]
    for threads in (1, 2, 4):
        records.append(BenchRecord(kernel="advection", strategy="parallel",
                                   threads=threads, rep=0,
                                   runtime_s=4.2 / threads))
    paths = emit_plots(compute_speedup(records), tmp_path)
    assert sorted(p.name for p in paths) == ["advection_runtime.svg",
                                             "advection_speedup.svg"]

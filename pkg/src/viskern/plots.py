"""Strong-scaling charts: runtime and speedup versus thread count, one SVG
per chart per kernel.

Output is byte-deterministic for fixed input: glyph ids are salted with a
fixed string and the SVG creation date is suppressed.
"""

from __future__ import annotations

import statistics
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .bench import BenchRecord

_SVG_RC = {"svg.hashsalt": "viskern", "svg.fonttype": "path"}

_STYLE = {
    "direct": dict(color="#1f77b4", marker="o"),
    "field_map": dict(color="#d62728", marker="s"),
    "point_neighborhood": dict(color="#2ca02c", marker="^"),
    "serial": dict(color="#1f77b4", marker="o"),
    "dpp": dict(color="#d62728", marker="s"),
    "parallel": dict(color="#d62728", marker="s"),
}


def _series(records: list[BenchRecord], kernel: str):
    """Per strategy: sorted thread counts with median runtime and speedup."""
    per: dict[str, dict[int, list[BenchRecord]]] = {}
    for r in records:
        if r.kernel == kernel:
            per.setdefault(r.strategy, {}).setdefault(r.threads, []).append(r)
    series = {}
    for strategy, by_threads in per.items():
        threads = sorted(by_threads)
        runtimes = [statistics.median(x.runtime_s for x in by_threads[t])
                    for t in threads]
        speedups = [by_threads[t][0].speedup for t in threads]
        series[strategy] = (threads, runtimes, speedups)
    return series


def _save(fig: Figure, path: Path) -> Path:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _base_axes(fig: Figure, xticks, ylabel: str, title: str):
    ax = fig.subplots()
    ax.set_xscale("log", base=2)
    ax.set_xticks(xticks, [str(t) for t in xticks])
    ax.set_xlabel("threads")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return ax


def emit_plots(records: list[BenchRecord], out_dir) -> list[Path]:
    """Two charts per kernel present in records; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kernels = sorted({r.kernel for r in records})
    written = []
    for kernel in kernels:
        series = _series(records, kernel)
        all_threads = sorted({t for s in series.values() for t in s[0]})
        if len(all_threads) < 2:
            raise ValueError(
                f"{kernel}: scaling plots need a sweep over >= 2 thread counts")

        fig = Figure(figsize=(5.5, 4.2))
        ax = _base_axes(fig, all_threads, "runtime (s)", f"{kernel}: runtime")
        for strategy in sorted(series):
            threads, runtimes, _ = series[strategy]
            ax.plot(threads, runtimes, label=strategy,
                    **_STYLE.get(strategy, {}))
        ax.set_yscale("log", base=2)
        ax.legend()
        written.append(_save(fig, out_dir / f"{kernel}_runtime.svg"))

        fig = Figure(figsize=(5.5, 4.2))
        ax = _base_axes(fig, all_threads, "speedup", f"{kernel}: speedup")
        ax.plot(all_threads, all_threads, linestyle="--", color="#999999",
                label="ideal")
        for strategy in sorted(series):
            threads, _, speedups = series[strategy]
            ax.plot(threads, speedups, label=strategy,
                    **_STYLE.get(strategy, {}))
        ax.legend()
        written.append(_save(fig, out_dir / f"{kernel}_speedup.svg"))
    return written

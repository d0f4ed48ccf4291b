"""Benchmark sweeps: configuration, dataset resolution, strong-scaling runs
inside marker regions, speedup computation, and CSV/JSON emission.

Every sweep cell (strategy x threads x repetition) must produce the same
kernel output; run_suite hashes each timed run and refuses to report timings
when any hash differs.  Inherently serial strategies run once at threads=1
no matter what thread counts the sweep asks for.
"""

from __future__ import annotations

import hashlib
import json
import logging
import statistics
from dataclasses import dataclass

from . import advection, counters, isocontour, stencil
from .field import (
    Dims,
    StructuredField,
    gen_impulse_image,
    gen_random_image,
    gen_random_volume,
    gen_rotational_field,
    gen_sphere_field,
)
from .io import load_field
from .runtime import DEFAULT_CHUNK_SIZE, ExecConfig

log = logging.getLogger("viskern.bench")

KERNELS = ("stencil", "isocontour", "advection")

KERNEL_STRATEGIES = {
    "stencil": ("direct", "field_map", "point_neighborhood"),
    "isocontour": ("serial", "dpp"),
    "advection": ("serial", "parallel"),
}

# strategies that cannot use more than one thread
SERIAL_ONLY = {("isocontour", "serial"), ("advection", "serial")}

CSV_HEADER = ("kernel,strategy,threads,rep,runtime_s,instructions,cycles,cpi,"
              "flops_scalar,flops_packed,vectorization_pct,l3_requests,"
              "l3_misses,l3_miss_ratio_pct,speedup")


@dataclass(frozen=True)
class BenchConfig:
    kernel: str
    strategies: tuple[str, ...]
    thread_counts: tuple[int, ...] = (1, 2, 4)
    repetitions: int = 3
    chunk_size: int = DEFAULT_CHUNK_SIZE
    dataset: str | None = None      # descriptor path
    synthetic: str | None = None    # synthetic spec, see make_synthetic
    radius: int = 19                # stencil kernel size (odd window width)
    sigma: float = 0.33
    isovalue: float = 0.0
    reclassify: bool = False
    n_seeds: int = 500
    max_steps: int = 1000
    step_size: float | None = None  # None -> 0.25 * min spacing
    rng_seed: int = 0
    warmup: bool = True

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        valid = KERNEL_STRATEGIES[self.kernel]
        for s in self.strategies:
            if s not in valid:
                raise ValueError(f"unknown {self.kernel} strategy {s!r} "
                                 f"(choose from {valid})")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if not self.thread_counts:
            raise ValueError("thread_counts must be nonempty")
        if list(self.thread_counts) != sorted(self.thread_counts):
            raise ValueError("thread_counts must be ascending")
        if any(t < 1 for t in self.thread_counts):
            raise ValueError("thread counts must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.radius < 1 or self.radius % 2 == 0:
            raise ValueError("stencil radius (window size) must be odd")


@dataclass
class BenchRecord:
    kernel: str
    strategy: str
    threads: int
    rep: int
    runtime_s: float
    instructions: int | None = None
    cycles: int | None = None
    cpi: float | None = None
    flops_scalar: int | None = None
    flops_packed: int | None = None
    vectorization_pct: float | None = None
    l3_requests: int | None = None
    l3_misses: int | None = None
    l3_miss_ratio_pct: float | None = None
    speedup: float | None = None
    output_hash: str = ""  # not part of the CSV schema

    CSV_FIELDS = ("kernel", "strategy", "threads", "rep", "runtime_s",
                  "instructions", "cycles", "cpi", "flops_scalar",
                  "flops_packed", "vectorization_pct", "l3_requests",
                  "l3_misses", "l3_miss_ratio_pct", "speedup")


# -- dataset resolution --------------------------------------------------------


def make_synthetic(spec: str, seed: int = 0) -> StructuredField:
    """Build a synthetic dataset from a spec string.

    Specs: random2d:WxH, impulse2d:WxH, random3d:NXxNYxNZ,
    sphere3d:N or NXxNYxNZ, rotational3d:N or NXxNYxNZ.
    """
    try:
        name, dim_text = spec.split(":", 1)
    except ValueError:
        raise ValueError(f"synthetic spec {spec!r} needs name:dims") from None
    parts = [int(p) for p in dim_text.lower().split("x")]
    if name in ("random2d", "impulse2d"):
        if len(parts) != 2:
            raise ValueError(f"{name} needs WxH dims, got {dim_text!r}")
        dims = Dims(parts[0], parts[1], 1)
        if name == "random2d":
            return gen_random_image(dims, seed=seed)
        return gen_impulse_image(dims, (dims.nx // 2, dims.ny // 2))
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValueError(f"{name} needs N or NXxNYxNZ dims, got {dim_text!r}")
    dims = Dims(*parts)
    if name == "sphere3d":
        center = tuple((n - 1) / 2.0 for n in dims.as_tuple())
        radius = 0.3 * (min(dims.as_tuple()) - 1)
        return gen_sphere_field(dims, center, radius)
    if name == "rotational3d":
        return gen_rotational_field(dims)
    if name == "random3d":
        return gen_random_volume(dims, seed=seed)
    raise ValueError(f"unknown synthetic dataset {name!r}")


DEFAULT_SYNTHETIC = {
    "stencil": "random2d:512x512",
    "isocontour": "sphere3d:64",
    "advection": "rotational3d:64",
}


def resolve_field(config: BenchConfig) -> StructuredField:
    if config.dataset and config.synthetic:
        raise ValueError("give either a dataset path or a synthetic spec, not both")
    if config.dataset:
        return load_field(config.dataset)
    spec = config.synthetic or DEFAULT_SYNTHETIC[config.kernel]
    return make_synthetic(spec, seed=config.rng_seed)


# -- kernel runners ------------------------------------------------------------


def _hash_bytes(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(c)
    return h.hexdigest()


def hash_output(kernel: str, out) -> str:
    if kernel == "stencil":
        return _hash_bytes(out.values.tobytes())
    if kernel == "isocontour":
        return _hash_bytes(out.vertices.tobytes(), out.triangles.tobytes())
    parts = []
    for line in out:
        parts.append(f"{line.seed_id}:{line.termination}".encode())
        parts.append(line.points.tobytes())
    return _hash_bytes(*parts)


def make_runner(config: BenchConfig, data: StructuredField):
    """Returns run(strategy, threads) -> kernel output."""
    if config.kernel == "stencil":
        kern = stencil.build_gaussian_weights(config.radius, config.sigma)

        def run(strategy, threads):
            cfg = ExecConfig(threads, config.chunk_size)
            return stencil.STRATEGIES[strategy](data, kern, cfg)

        return run

    if config.kernel == "isocontour":

        def run(strategy, threads):
            if strategy == "serial":
                return isocontour.contour_serial(data, config.isovalue)
            cfg = ExecConfig(threads, config.chunk_size)
            return isocontour.contour_dpp(data, config.isovalue, cfg,
                                          reclassify=config.reclassify)

        return run

    seeds = advection.make_diagonal_seeds(data, config.n_seeds)
    params = advection.IntegrationParams(
        config.step_size or advection.default_step_size(data), config.max_steps)

    def run(strategy, threads):
        if strategy == "serial":
            return advection.trace_serial(data, seeds, params)
        cfg = ExecConfig(threads, config.chunk_size)
        return advection.trace_parallel_over_seeds(data, seeds, params, cfg)

    return run


# -- the sweep -------------------------------------------------------------


def run_suite(config: BenchConfig, data: StructuredField | None = None) -> list[BenchRecord]:
    """Run every strategy x thread count x repetition inside a marker region
    named "<kernel>/<strategy>", verify all outputs hash identically, and
    return one record per cell with speedups filled in."""
    if data is None:
        data = resolve_field(config)
    run = make_runner(config, data)
    records: list[BenchRecord] = []
    seen_hashes: dict[str, str] = {}

    for strategy in config.strategies:
        if (config.kernel, strategy) in SERIAL_ONLY:
            threads_list = [1]
            if any(t > 1 for t in config.thread_counts):
                log.info("%s/%s is serial; recording threads=1 only",
                         config.kernel, strategy)
        else:
            threads_list = list(config.thread_counts)
        for threads in threads_list:
            if config.warmup:
                run(strategy, threads)
            for rep in range(config.repetitions):
                counters.reset_markers()
                region = f"{config.kernel}/{strategy}"
                counters.marker_start(region)
                out = run(strategy, threads)
                counters.marker_stop(region)
                report = counters.region_report(region)
                digest = hash_output(config.kernel, out)
                seen_hashes[f"{strategy}/t{threads}/r{rep}"] = digest
                s = report.sample
                m = report.metrics
                records.append(BenchRecord(
                    kernel=config.kernel, strategy=strategy, threads=threads,
                    rep=rep, runtime_s=s.wall_time,
                    instructions=s.instructions, cycles=s.cycles, cpi=m.cpi,
                    flops_scalar=s.flops_scalar, flops_packed=s.flops_packed,
                    vectorization_pct=m.vectorization_pct,
                    l3_requests=s.l3_requests, l3_misses=s.l3_misses,
                    l3_miss_ratio_pct=m.l3_miss_ratio_pct,
                    output_hash=digest,
                ))

    unique = set(seen_hashes.values())
    if len(unique) > 1:
        detail = ", ".join(f"{k}={v[:12]}" for k, v in sorted(seen_hashes.items()))
        raise RuntimeError(f"sweep cells disagree on kernel output: {detail}")
    return compute_speedup(records)


def compute_speedup(records: list[BenchRecord]) -> list[BenchRecord]:
    """speedup(strategy, P) = median runtime at threads=1 / median at P."""
    groups: dict[tuple[str, str], dict[int, list[float]]] = {}
    for r in records:
        groups.setdefault((r.kernel, r.strategy), {}).setdefault(
            r.threads, []).append(r.runtime_s)
    medians = {}
    for key, by_threads in groups.items():
        if 1 not in by_threads:
            raise ValueError(f"no threads=1 baseline for {key[0]}/{key[1]}")
        for threads, times in by_threads.items():
            medians[key + (threads,)] = statistics.median(times)
    for r in records:
        if r.threads == 1:
            r.speedup = 1.0
        else:
            base = medians[(r.kernel, r.strategy, 1)]
            r.speedup = base / medians[(r.kernel, r.strategy, r.threads)]
    return records


# -- report emission -----------------------------------------------------------


def _cell_text(value) -> str:
    if value is None:
        return "N/A"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records: list[BenchRecord], path) -> None:
    if not records:
        raise ValueError("no records to emit")
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(",".join(_cell_text(getattr(r, f))
                              for f in BenchRecord.CSV_FIELDS) + "\n")


def emit_json(records: list[BenchRecord], path) -> None:
    if not records:
        raise ValueError("no records to emit")
    rows = [{f: getattr(r, f) for f in BenchRecord.CSV_FIELDS} for r in records]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")

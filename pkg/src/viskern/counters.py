"""Marker-region instrumentation: bracket a code region with marker_start /
marker_stop and collect wall time, deterministic software FLOP tallies, and
hardware counters when the platform exposes them.

Counter availability is data, not an error: absent fields are None and render
as "N/A" in reports.  Backend selection comes from the VISKERN_COUNTERS
environment variable (AUTO | HARDWARE | SOFTWARE | NONE, default AUTO).

Software FLOP tallies count the kernels' logical multiply/add/divide
operations (each kernel reports the op count of its inner sums per work
chunk); they are bit-deterministic across runs and thread counts.  Worker
threads contribute to per-thread slots that are merged into one aggregate
sample at marker_stop.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

from .perf_backend import hardware_backend_open

ENV_VAR = "VISKERN_COUNTERS"
BACKEND_MODES = ("AUTO", "HARDWARE", "SOFTWARE", "NONE")


class MarkerError(RuntimeError):
    """Marker API misuse: stop without start, or double start."""


@dataclass(frozen=True)
class CounterSample:
    """Raw counters for one region.  None means the counter was unavailable."""

    instructions: int | None = None
    cycles: int | None = None
    flops_scalar: int | None = None
    flops_packed: int | None = None
    l3_requests: int | None = None
    l3_misses: int | None = None
    wall_time: float = 0.0
    call_count: int = 0

    def __post_init__(self):
        for name in ("instructions", "cycles", "flops_scalar", "flops_packed",
                     "l3_requests", "l3_misses"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if (self.l3_requests is not None and self.l3_misses is not None
                and self.l3_misses > self.l3_requests):
            raise ValueError("l3_misses cannot exceed l3_requests")


def _add_opt(a, b):
    if a is None and b is None:
        return None
    return (a or 0) + (b or 0)


def merge_samples(samples) -> CounterSample:
    """Sum counters across samples (associative and commutative).

    wall_time and call_count add as well; per-thread merging keeps the
    orchestration-side values by adding zero-valued thread samples.
    """
    out = CounterSample()
    for s in samples:
        out = CounterSample(
            instructions=_add_opt(out.instructions, s.instructions),
            cycles=_add_opt(out.cycles, s.cycles),
            flops_scalar=_add_opt(out.flops_scalar, s.flops_scalar),
            flops_packed=_add_opt(out.flops_packed, s.flops_packed),
            l3_requests=_add_opt(out.l3_requests, s.l3_requests),
            l3_misses=_add_opt(out.l3_misses, s.l3_misses),
            wall_time=out.wall_time + s.wall_time,
            call_count=out.call_count + s.call_count,
        )
    return out


@dataclass(frozen=True)
class DerivedMetrics:
    """Metrics derived from a CounterSample; None where inputs are absent."""

    cpi: float | None = None
    vectorization_pct: float | None = None
    l3_miss_ratio_pct: float | None = None
    runtime_s: float = 0.0


def derive_metrics(s: CounterSample) -> DerivedMetrics:
    """cycles/instructions, 100*packed/(packed+scalar), 100*misses/requests."""
    cpi = None
    if s.cycles is not None and s.instructions is not None and s.instructions > 0:
        cpi = s.cycles / s.instructions
    vec = None
    if s.flops_scalar is not None or s.flops_packed is not None:
        scalar = s.flops_scalar or 0
        packed = s.flops_packed or 0
        if scalar + packed > 0:
            vec = 100.0 * packed / (packed + scalar)
    miss = None
    if (s.l3_requests is not None and s.l3_misses is not None
            and s.l3_requests > 0):
        miss = 100.0 * s.l3_misses / s.l3_requests
    return DerivedMetrics(cpi=cpi, vectorization_pct=vec,
                          l3_miss_ratio_pct=miss, runtime_s=s.wall_time)


@dataclass(frozen=True)
class RegionReport:
    name: str
    sample: CounterSample
    per_thread: dict = field(default_factory=dict)

    @property
    def metrics(self) -> DerivedMetrics:
        return derive_metrics(self.sample)


class _ActiveRegion:
    __slots__ = ("t0", "backend", "thread_flops")

    def __init__(self, t0, backend):
        self.t0 = t0
        self.backend = backend
        self.thread_flops: dict[int, int] = {}


class MarkerRegistry:
    """Tracks marker regions for one process.

    marker start/stop run on the orchestration thread; add_flops may be called
    from any worker thread while its region is active.  Distinct regions may
    nest; a region may not overlap itself.  Repeat visits accumulate.
    """

    def __init__(self, backend_mode: str | None = None):
        mode = backend_mode or os.environ.get(ENV_VAR, "AUTO")
        mode = mode.upper()
        if mode not in BACKEND_MODES:
            raise ValueError(f"backend mode must be one of {BACKEND_MODES}, got {mode!r}")
        self.backend_mode = mode
        self._lock = threading.Lock()
        self._active: dict[str, _ActiveRegion] = {}
        self._finished: dict[str, list[CounterSample]] = {}
        self._per_thread: dict[str, dict[int, CounterSample]] = {}
        self._hardware_probed = False
        self._hardware_ok = False

    # -- backend capabilities ------------------------------------------------

    @property
    def software_enabled(self) -> bool:
        return self.backend_mode in ("AUTO", "SOFTWARE")

    @property
    def hardware_wanted(self) -> bool:
        return self.backend_mode in ("AUTO", "HARDWARE")

    def hardware_available(self) -> bool:
        """Probe (once) whether any hardware counter can be opened."""
        if not self._hardware_probed:
            backend = hardware_backend_open()
            self._hardware_ok = backend is not None
            if backend is not None:
                backend.close()
            self._hardware_probed = True
        return self._hardware_ok

    # -- marker API ----------------------------------------------------------

    def start(self, name: str) -> None:
        if self.backend_mode == "NONE":
            with self._lock:
                if name in self._active:
                    raise MarkerError(f"region {name!r} started twice")
                self._active[name] = _ActiveRegion(time.perf_counter(), None)
            return
        backend = None
        if self.hardware_wanted and not (self._hardware_probed and not self._hardware_ok):
            backend = hardware_backend_open()
            if not self._hardware_probed:
                self._hardware_probed = True
                self._hardware_ok = backend is not None
        with self._lock:
            if name in self._active:
                if backend is not None:
                    backend.close()
                raise MarkerError(f"region {name!r} started twice")
            region = _ActiveRegion(0.0, backend)
            self._active[name] = region
        if backend is not None:
            backend.start()
        region.t0 = time.perf_counter()

    def stop(self, name: str) -> None:
        t1 = time.perf_counter()
        with self._lock:
            region = self._active.pop(name, None)
        if region is None:
            raise MarkerError(f"region {name!r} stopped without start")
        hw: dict[str, int] = {}
        if region.backend is not None:
            hw = region.backend.stop_and_read()
            region.backend.close()
        with self._lock:
            threads = self._per_thread.setdefault(name, {})
            total_flops = 0
            for tid, flops in region.thread_flops.items():
                total_flops += flops
                prev = threads.get(tid)
                sample = CounterSample(flops_scalar=flops, flops_packed=0)
                threads[tid] = merge_samples((prev, sample)) if prev else sample
            software = self.software_enabled
            sample = CounterSample(
                instructions=hw.get("instructions"),
                cycles=hw.get("cycles"),
                flops_scalar=total_flops if software else None,
                flops_packed=0 if software else None,
                l3_requests=hw.get("l3_requests"),
                l3_misses=hw.get("l3_misses"),
                wall_time=t1 - region.t0,
                call_count=1,
            )
            self._finished.setdefault(name, []).append(sample)

    def add_flops(self, n: int) -> None:
        """Credit n logical float ops to every active region (current thread)."""
        if not self.software_enabled:
            return
        with self._lock:
            if not self._active:
                return
            tid = threading.get_ident()
            for region in self._active.values():
                region.thread_flops[tid] = region.thread_flops.get(tid, 0) + n

    def report(self, name: str) -> RegionReport:
        with self._lock:
            visits = self._finished.get(name)
            if not visits:
                raise MarkerError(f"no finished visits for region {name!r}")
            per_thread = dict(self._per_thread.get(name, {}))
        return RegionReport(name=name, sample=merge_samples(visits),
                            per_thread=per_thread)

    def region_names(self) -> list[str]:
        with self._lock:
            return sorted(self._finished)

    def reset(self) -> None:
        with self._lock:
            for region in self._active.values():
                if region.backend is not None:
                    region.backend.close()
            self._active.clear()
            self._finished.clear()
            self._per_thread.clear()


_default = MarkerRegistry()


def get_registry() -> MarkerRegistry:
    return _default


def set_backend_mode(mode: str) -> None:
    """Swap the process-wide registry for one with the given backend mode."""
    global _default
    _default.reset()
    _default = MarkerRegistry(backend_mode=mode)


def marker_start(name: str) -> None:
    _default.start(name)


def marker_stop(name: str) -> None:
    _default.stop(name)


def add_flops(n: int) -> None:
    _default.add_flops(n)


def region_report(name: str) -> RegionReport:
    return _default.report(name)


def reset_markers() -> None:
    _default.reset()

"""Minimal data-parallel-primitive execution layer: field-map dispatch,
point-neighborhood dispatch with boundary clamping, exclusive scan, and
scatter-counting.

Worklets must be pure: they read only shared inputs and write only the output
slots they own for their index.  That contract is enforced by tests, not at
runtime.  Given a pure worklet, dispatch output is identical for every
(num_threads, chunk_size) combination.

The index range is partitioned into contiguous blocks of chunk_size; block k
is statically assigned to worker k % num_threads.  Dispatch calls block until
every invocation has completed; a worklet exception aborts the dispatch and is
re-raised.  One orchestration thread drives the runtime at a time.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .field import Dims

DEFAULT_CHUNK_SIZE = 4096

# counts whose running sum could overflow a signed 64-bit index are rejected
_INDEX_MAX = 2**62


class ContractViolation(RuntimeError):
    """A worklet broke its access contract (checked dispatches only)."""


@dataclass(frozen=True)
class ExecConfig:
    num_threads: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if self.num_threads < 1:
            raise ValueError("num_threads must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")


def chunk_ranges(n: int, chunk_size: int) -> list[tuple[int, int]]:
    """Contiguous (lo, hi) blocks covering [0, n)."""
    return [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]


def run_partitioned(run_chunk, chunks, num_threads: int) -> None:
    """Run run_chunk(lo, hi) over all chunks; block k goes to worker k % T."""
    if num_threads == 1 or len(chunks) <= 1:
        for lo, hi in chunks:
            run_chunk(lo, hi)
        return

    def worker(part):
        for lo, hi in part:
            run_chunk(lo, hi)

    parts = [chunks[t::num_threads] for t in range(num_threads)]
    parts = [p for p in parts if p]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        futures = [pool.submit(worker, p) for p in parts]
        for f in futures:
            f.result()  # re-raise the first worker failure


def dispatch_field_map(worklet, n: int, cfg: ExecConfig) -> None:
    """Invoke worklet(i) exactly once per index in [0, n)."""

    def run_chunk(lo, hi):
        for i in range(lo, hi):
            worklet(i)

    run_partitioned(run_chunk, chunk_ranges(n, cfg.chunk_size), cfg.num_threads)


def dispatch_field_map_blocked(worklet, n: int, cfg: ExecConfig) -> None:
    """Invoke worklet(lo, hi) once per chunk; the worklet owns [lo, hi).

    Same partitioning and purity contract as dispatch_field_map, for worklets
    that process their index range with vectorized operations.
    """
    run_partitioned(worklet, chunk_ranges(n, cfg.chunk_size), cfg.num_threads)


@dataclass(frozen=True)
class BoundaryState:
    """Clamping info for one grid point of a point-neighborhood dispatch."""

    center: tuple[int, int, int]
    dims: Dims

    def min_neighbor_indices(self, radius: int) -> tuple[int, int, int]:
        c = self.center
        return (max(-radius, -c[0]), max(-radius, -c[1]), max(-radius, -c[2]))

    def max_neighbor_indices(self, radius: int) -> tuple[int, int, int]:
        c = self.center
        d = self.dims.as_tuple()
        return (
            min(radius, d[0] - 1 - c[0]),
            min(radius, d[1] - 1 - c[1]),
            min(radius, d[2] - 1 - c[2]),
        )


class Neighborhood:
    """Read access to grid values around a center point via get(di, dj, dk).

    Offsets must stay inside the clamped bounds reported by the matching
    BoundaryState; checked dispatches raise ContractViolation on violations.
    The dispatcher re-centers one accessor per worker, so worklets must not
    retain it across invocations.
    """

    __slots__ = ("_vals", "_nx", "_ny", "_nz", "ci", "cj", "ck", "_checked")

    def __init__(self, flat_values, dims: Dims, checked: bool = False):
        self._vals = flat_values
        self._nx, self._ny, self._nz = dims.as_tuple()
        self.ci = 0
        self.cj = 0
        self.ck = 0
        self._checked = checked

    def get(self, di: int, dj: int, dk: int = 0) -> float:
        i = self.ci + di
        j = self.cj + dj
        k = self.ck + dk
        if self._checked and not (
            0 <= i < self._nx and 0 <= j < self._ny and 0 <= k < self._nz
        ):
            raise ContractViolation(
                f"neighborhood access ({di},{dj},{dk}) leaves the grid at "
                f"center ({self.ci},{self.cj},{self.ck})"
            )
        return self._vals[(k * self._ny + j) * self._nx + i]


def dispatch_point_neighborhood(worklet, dims: Dims, out, cfg: ExecConfig,
                                flat_values=None, checked: bool = False) -> None:
    """Invoke worklet(neighborhood, boundary) once per grid point.

    The returned value is written to out[flat_point_index].  flat_values is
    the field's flat value sequence (a Python list is fastest for the scalar
    access pattern); out must have dims.num_points slots.
    """
    if flat_values is None:
        raise ValueError("flat_values is required")
    n = dims.num_points
    if len(out) != n:
        raise ValueError(f"out has {len(out)} slots, expected {n}")
    nx, ny = dims.nx, dims.ny

    def run_chunk(lo, hi):
        neigh = Neighborhood(flat_values, dims, checked=checked)
        for idx in range(lo, hi):
            k, rem = divmod(idx, nx * ny)
            j, i = divmod(rem, nx)
            neigh.ci = i
            neigh.cj = j
            neigh.ck = k
            out[idx] = worklet(neigh, BoundaryState((i, j, k), dims))

    run_partitioned(run_chunk, chunk_ranges(n, cfg.chunk_size), cfg.num_threads)


def exclusive_scan(xs) -> np.ndarray:
    """out[0] = 0, out[i] = out[i-1] + xs[i-1]; length preserved."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size == 0:
        return np.zeros(0, dtype=np.int64)
    if xs.min() < 0:
        raise ValueError("scan input must be non-negative")
    if int(xs.max()) > _INDEX_MAX // xs.size:
        raise OverflowError("scan total would overflow the index type")
    out = np.empty(xs.size, dtype=np.int64)
    out[0] = 0
    np.cumsum(xs[:-1], out=out[1:])
    return out


@dataclass(frozen=True)
class ScatterPlan:
    """Output placement for inputs that each produce counts[i] outputs:
    input i writes [offsets[i], offsets[i] + counts[i])."""

    counts: np.ndarray
    offsets: np.ndarray
    total: int


def build_scatter(counts) -> ScatterPlan:
    counts = np.asarray(counts, dtype=np.int64)
    offsets = exclusive_scan(counts)
    total = int(offsets[-1] + counts[-1]) if counts.size else 0
    return ScatterPlan(counts=counts, offsets=offsets, total=total)

"""Gaussian smoothing of 2D images in three execution strategies:

* smooth_direct            - coarse scanline parallelism (row blocks per thread)
* smooth_field_map         - field-map dispatch over the flat pixel range with
                             explicit (i, j) index arithmetic in the worklet
* smooth_point_neighborhood - per-pixel worklet reading through a clamped
                             neighborhood accessor

All strategies clamp windows at image borders and renormalize by the sum of
in-bounds weights, accumulate in float64 in the same (dj, di) order, and store
float32, so their outputs are byte-identical to each other and across any
thread count or chunk size.

Software FLOP tallies follow the per-pixel sum-of-products model: one multiply
and one add per in-bounds window element, plus one renormalization divide per
clamped pixel.  That logical count is what reports carry, independent of how
a strategy vectorizes the arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import counters
from .field import StructuredField
from .runtime import (
    ExecConfig,
    run_partitioned,
    dispatch_field_map_blocked,
    dispatch_point_neighborhood,
)


@dataclass(frozen=True)
class GaussianKernel:
    """Normalized R x R weight matrix; radius is (R-1)/2."""

    size: int
    sigma: float
    weights: np.ndarray  # (R, R) float64, sums to 1

    @property
    def radius(self) -> int:
        return (self.size - 1) // 2


def build_gaussian_weights(size: int, sigma: float) -> GaussianKernel:
    """Gaussian weights exp(-0.5*(d/sigma)^2) over an R x R window, normalized
    to sum to 1.  d is the euclidean pixel distance from the center divided by
    the radius, so sigma is expressed in half-widths; R=1 is the single weight
    1.0.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if size == 1:
        return GaussianKernel(1, sigma, np.ones((1, 1)))
    r = (size - 1) // 2
    d = np.arange(-r, r + 1, dtype=np.float64)
    dist = np.sqrt(d[:, None] ** 2 + d[None, :] ** 2) / r
    w = np.exp(-0.5 * (dist / sigma) ** 2)
    w /= w.sum()
    return GaussianKernel(size, sigma, w)


def _require_image(image: StructuredField) -> None:
    if not (image.is_2d and image.components == 1):
        raise ValueError("stencil smoothing requires a 2D scalar field")


def _result(image: StructuredField, flat32: np.ndarray) -> StructuredField:
    return StructuredField(image.dims, flat32, components=1,
                           origin=image.origin, spacing=image.spacing)


# -- logical FLOP accounting ---------------------------------------------------


class _WindowGeometry:
    """Per-axis in-bounds window extents and prefix sums for O(1) tallies."""

    def __init__(self, nx: int, ny: int, size: int):
        r = (size - 1) // 2
        ix = np.arange(nx)
        iy = np.arange(ny)
        self.size = size
        self.wx = np.minimum(ix, r) + np.minimum(nx - 1 - ix, r) + 1
        self.wy = np.minimum(iy, r) + np.minimum(ny - 1 - iy, r) + 1
        self.cum_wx = np.concatenate(([0], np.cumsum(self.wx)))
        self.cum_clamped_x = np.concatenate(([0], np.cumsum(self.wx < size)))
        self.sum_wx = int(self.cum_wx[-1])
        self.clamped_x = int(self.cum_clamped_x[-1])
        self.nx = nx
        self.ny = ny

    def flops_rows(self, r0: int, r1: int) -> int:
        """Tally for whole rows [r0, r1)."""
        wy = self.wy[r0:r1]
        madds = int(wy.sum()) * self.sum_wx
        clamped = int(np.sum(np.where(wy < self.size, self.nx, self.clamped_x)))
        return 2 * madds + clamped

    def flops_flat(self, lo: int, hi: int) -> int:
        """Tally for the flat pixel range [lo, hi)."""
        madds = 0
        clamped = 0
        pos = lo
        while pos < hi:
            j, c0 = divmod(pos, self.nx)
            c1 = min(self.nx, c0 + (hi - pos))
            wy = int(self.wy[j])
            madds += wy * int(self.cum_wx[c1] - self.cum_wx[c0])
            if wy < self.size:
                clamped += c1 - c0
            else:
                clamped += int(self.cum_clamped_x[c1] - self.cum_clamped_x[c0])
            pos += c1 - c0
        return 2 * madds + clamped


def expected_flops(nx: int, ny: int, size: int) -> int:
    """Whole-image tally: 2 * sum(window sizes) + number of clamped pixels."""
    return _WindowGeometry(nx, ny, size).flops_rows(0, ny)


# -- shared accumulation core --------------------------------------------------


def _accumulate_rows(img64: np.ndarray, w: np.ndarray, r: int,
                     r0: int, r1: int) -> tuple[np.ndarray, np.ndarray]:
    """Weighted window sums and in-bounds weight sums for output rows [r0, r1).

    Terms accumulate in (dj, di) order; boundary windows simply skip
    out-of-range offsets.
    """
    ny, nx = img64.shape
    acc = np.zeros((r1 - r0, nx))
    den = np.zeros((r1 - r0, nx))
    for dj in range(-r, r + 1):
        js0 = max(r0 + dj, 0)
        js1 = min(r1 + dj, ny)
        if js0 >= js1:
            continue
        o0 = js0 - (r0 + dj)
        o1 = o0 + (js1 - js0)
        for di in range(-r, r + 1):
            d0 = max(-di, 0)
            d1 = min(nx - di, nx)
            if d0 >= d1:
                continue
            wv = w[dj + r, di + r]
            acc[o0:o1, d0:d1] += wv * img64[js0:js1, d0 + di:d1 + di]
            den[o0:o1, d0:d1] += wv
    return acc, den


def _accumulate_flat(flat64: np.ndarray, nx: int, ny: int, w: np.ndarray,
                     r: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Same sums as _accumulate_rows for the flat pixel range [lo, hi).

    The worklet derives (row, column) spans from the 1D range and indexes the
    flat input array with explicit offset arithmetic.
    """
    acc = np.zeros(hi - lo)
    den = np.zeros(hi - lo)
    pos = lo
    while pos < hi:
        j, c0 = divmod(pos, nx)
        c1 = min(nx, c0 + (hi - pos))
        o = pos - lo
        a = acc[o:o + (c1 - c0)]
        d = den[o:o + (c1 - c0)]
        for dj in range(-r, r + 1):
            jj = j + dj
            if jj < 0 or jj >= ny:
                continue
            rowbase = jj * nx
            for di in range(-r, r + 1):
                s0 = c0 + di
                s1 = c1 + di
                t0 = max(s0, 0)
                t1 = min(s1, nx)
                if t0 >= t1:
                    continue
                wv = w[dj + r, di + r]
                a[t0 - s0:t0 - s0 + (t1 - t0)] += wv * flat64[rowbase + t0:rowbase + t1]
                d[t0 - s0:t0 - s0 + (t1 - t0)] += wv
        pos += c1 - c0
    return acc, den


# -- strategies ----------------------------------------------------------------


def smooth_direct(image: StructuredField, kernel: GaussianKernel,
                  cfg: ExecConfig) -> StructuredField:
    """Scanline-parallel smoothing: contiguous row blocks, one per thread."""
    _require_image(image)
    nx, ny = image.dims.nx, image.dims.ny
    r = kernel.radius
    w = kernel.weights
    img64 = image.values.reshape(ny, nx).astype(np.float64)
    out = np.empty((ny, nx), dtype=np.float32)
    geom = _WindowGeometry(nx, ny, kernel.size)

    def run_rows(r0, r1):
        acc, den = _accumulate_rows(img64, w, r, r0, r1)
        out[r0:r1] = (acc / den).astype(np.float32)
        counters.add_flops(geom.flops_rows(r0, r1))

    rows_per = -(-ny // cfg.num_threads)
    blocks = [(r0, min(r0 + rows_per, ny)) for r0 in range(0, ny, rows_per)]
    run_partitioned(run_rows, blocks, cfg.num_threads)
    return _result(image, out.reshape(-1))


def smooth_field_map(image: StructuredField, kernel: GaussianKernel,
                     cfg: ExecConfig) -> StructuredField:
    """Field-map smoothing over the flat pixel index range."""
    _require_image(image)
    nx, ny = image.dims.nx, image.dims.ny
    r = kernel.radius
    w = kernel.weights
    flat64 = image.values.astype(np.float64)
    out = np.empty(nx * ny, dtype=np.float32)
    geom = _WindowGeometry(nx, ny, kernel.size)

    def worklet(lo, hi):
        acc, den = _accumulate_flat(flat64, nx, ny, w, r, lo, hi)
        out[lo:hi] = (acc / den).astype(np.float32)
        counters.add_flops(geom.flops_flat(lo, hi))

    dispatch_field_map_blocked(worklet, nx * ny, cfg)
    return _result(image, out)


def smooth_point_neighborhood(image: StructuredField, kernel: GaussianKernel,
                              cfg: ExecConfig, checked: bool = False) -> StructuredField:
    """Per-pixel smoothing through a clamped neighborhood accessor."""
    _require_image(image)
    nx, ny = image.dims.nx, image.dims.ny
    r = kernel.radius
    wrows = kernel.weights.tolist()
    values = image.values.tolist()
    out = np.empty(nx * ny, dtype=np.float64)

    def worklet(neigh, boundary):
        mn = boundary.min_neighbor_indices(r)
        mx = boundary.max_neighbor_indices(r)
        get = neigh.get
        s = 0.0
        den = 0.0
        for dj in range(mn[1], mx[1] + 1):
            wrow = wrows[dj + r]
            for di in range(mn[0], mx[0] + 1):
                wv = wrow[di + r]
                s += wv * get(di, dj)
                den += wv
        return s / den

    dispatch_point_neighborhood(worklet, image.dims, out, cfg,
                                flat_values=values, checked=checked)
    counters.add_flops(_WindowGeometry(nx, ny, kernel.size).flops_rows(0, ny))
    return _result(image, out.astype(np.float32))


STRATEGIES = {
    "direct": smooth_direct,
    "field_map": smooth_field_map,
    "point_neighborhood": smooth_point_neighborhood,
}

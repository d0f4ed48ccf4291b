"""Structured-grid containers, point location, interpolation, and synthetic
dataset generators.

Grids are axis-aligned with per-axis point counts, an origin, and positive
spacing.  Values are stored as a flat float32 array in row-major order with x
fastest and vector components interleaved:

    flat_index(i, j, k, c) = ((k*ny + j)*nx + i) * components + c

2D data is a 3D grid with nz == 1.  Fields are immutable after construction
and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dims:
    """Point counts per axis (nz=1 for 2D)."""

    nx: int
    ny: int
    nz: int = 1

    def __post_init__(self):
        for n in (self.nx, self.ny, self.nz):
            if not isinstance(n, int) or n < 1:
                raise ValueError(f"dims must be positive integers, got {self}")

    @property
    def num_points(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def num_cells(self) -> int:
        return max(self.nx - 1, 1) * max(self.ny - 1, 1) * max(self.nz - 1, 1)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)


def linear_index(i: int, j: int, k: int, dims: Dims) -> int:
    """Flat point index for (i, j, k); raises IndexError when out of range."""
    if not (0 <= i < dims.nx and 0 <= j < dims.ny and 0 <= k < dims.nz):
        raise IndexError(f"point index ({i},{j},{k}) out of range for {dims}")
    return (k * dims.ny + j) * dims.nx + i


def unravel_index(idx: int, dims: Dims) -> tuple[int, int, int]:
    """Inverse of linear_index."""
    if not (0 <= idx < dims.num_points):
        raise IndexError(f"flat index {idx} out of range for {dims}")
    k, rem = divmod(idx, dims.nx * dims.ny)
    j, i = divmod(rem, dims.nx)
    return i, j, k


@dataclass(frozen=True)
class StructuredField:
    """Scalar (components=1) or vector (components=3) field on a structured grid.

    values is flat float32, length nx*ny*nz*components, component-interleaved.
    """

    dims: Dims
    values: np.ndarray
    components: int = 1
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.components not in (1, 3):
            raise ValueError("components must be 1 or 3")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        vals = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        expected = self.dims.num_points * self.components
        if vals.size != expected:
            raise ValueError(
                f"values has {vals.size} entries, expected {expected} for {self.dims}"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def is_2d(self) -> bool:
        return self.dims.nz == 1

    def max_corner(self) -> tuple[float, float, float]:
        return tuple(
            self.origin[a] + self.spacing[a] * (self.dims.as_tuple()[a] - 1)
            for a in range(3)
        )

    def node_position(self, i: int, j: int, k: int = 0) -> tuple[float, float, float]:
        return (
            self.origin[0] + self.spacing[0] * i,
            self.origin[1] + self.spacing[1] * j,
            self.origin[2] + self.spacing[2] * k,
        )

    def value_at(self, i: int, j: int, k: int = 0, c: int = 0) -> float:
        return float(self.values[linear_index(i, j, k, self.dims) * self.components + c])

    def as_2d_array(self) -> np.ndarray:
        """(ny, nx) view of a 2D scalar field."""
        if not (self.is_2d and self.components == 1):
            raise ValueError("as_2d_array requires a 2D scalar field")
        return self.values.reshape(self.dims.ny, self.dims.nx)


@dataclass(frozen=True)
class CellLocation:
    inside: bool
    cell: tuple[int, int, int] = (0, 0, 0)
    uvw: tuple[float, float, float] = (0.0, 0.0, 0.0)


OUTSIDE = CellLocation(inside=False)


def locate_cell(f: StructuredField, p) -> CellLocation:
    """Locate p in the grid.  Points on the max face belong to the last cell;
    points outside [origin, max_corner] give inside=False.  Degenerate axes
    (n == 1) require the coordinate to equal the origin exactly.
    """
    dims = f.dims.as_tuple()
    cell = [0, 0, 0]
    uvw = [0.0, 0.0, 0.0]
    for a in range(3):
        n = dims[a]
        if n == 1:
            if p[a] != f.origin[a]:
                return OUTSIDE
            continue
        t = (p[a] - f.origin[a]) / f.spacing[a]
        if t < 0.0 or t > n - 1:
            return OUTSIDE
        i = int(t)
        if i > n - 2:
            i = n - 2
        cell[a] = i
        uvw[a] = t - i
    return CellLocation(True, tuple(cell), tuple(uvw))


def interpolate(f: StructuredField, p):
    """Trilinear (bilinear/linear on degenerate axes) interpolation at p.

    Returns a float for scalar fields, a 3-tuple for vector fields, or None
    when p is outside the domain.  Accumulation is in float64.
    """
    loc = locate_cell(f, p)
    if not loc.inside:
        return None
    i, j, k = loc.cell
    u, v, w = loc.uvw
    nx, ny, nz = f.dims.as_tuple()
    um, vm, wm = 1.0 - u, 1.0 - v, 1.0 - w
    # corner weights in MC corner-bit order over (di, dj, dk)
    weights = (
        (0, 0, 0, um * vm * wm),
        (1, 0, 0, u * vm * wm),
        (0, 1, 0, um * v * wm),
        (1, 1, 0, u * v * wm),
        (0, 0, 1, um * vm * w),
        (1, 0, 1, u * vm * w),
        (0, 1, 1, um * v * w),
        (1, 1, 1, u * v * w),
    )
    comps = f.components
    vals = f.values
    out = [0.0] * comps
    for di, dj, dk, wt in weights:
        if wt == 0.0 and (i + di >= nx or j + dj >= ny or k + dk >= nz):
            continue  # zero-weight corner beyond a degenerate axis
        base = ((k + dk) * ny + (j + dj)) * nx + (i + di)
        base *= comps
        for c in range(comps):
            out[c] += wt * float(vals[base + c])
    if comps == 1:
        return out[0]
    return tuple(out)


def gen_sphere_field(dims: Dims, center, radius: float) -> StructuredField:
    """Scalar field: signed distance to a sphere (negative inside)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.arange(dims.nx, dtype=np.float64)
    y = np.arange(dims.ny, dtype=np.float64)
    z = np.arange(dims.nz, dtype=np.float64)
    dx2 = (x - center[0]) ** 2
    dy2 = (y - center[1]) ** 2
    dz2 = (z - center[2]) ** 2
    dist = np.sqrt(
        dx2[None, None, :] + dy2[None, :, None] + dz2[:, None, None]
    )
    return StructuredField(dims, (dist - radius).astype(np.float32))


def gen_rotational_field(dims: Dims) -> StructuredField:
    """Vector field v = (-y, x, 0) on a grid centered on the origin."""
    if dims.nz < 2:
        raise ValueError("rotational field requires a 3D grid")
    origin = tuple(-(n - 1) / 2.0 for n in dims.as_tuple())
    x = origin[0] + np.arange(dims.nx, dtype=np.float64)
    y = origin[1] + np.arange(dims.ny, dtype=np.float64)
    vals = np.zeros((dims.nz, dims.ny, dims.nx, 3), dtype=np.float32)
    vals[:, :, :, 0] = -y[None, :, None]
    vals[:, :, :, 1] = x[None, None, :]
    return StructuredField(dims, vals, components=3, origin=origin)


def gen_impulse_image(dims: Dims, at: tuple[int, int]) -> StructuredField:
    """2D scalar image: 1.0 at (i, j), 0 elsewhere."""
    if dims.nz != 1:
        raise ValueError("impulse image must be 2D")
    i, j = at
    if not (0 <= i < dims.nx and 0 <= j < dims.ny):
        raise IndexError(f"impulse location {at} out of range for {dims}")
    vals = np.zeros(dims.num_points, dtype=np.float32)
    vals[j * dims.nx + i] = 1.0
    return StructuredField(dims, vals)


def gen_random_image(dims: Dims, seed: int = 0) -> StructuredField:
    """2D scalar image with uniform [0, 1) values (seeded)."""
    if dims.nz != 1:
        raise ValueError("random image must be 2D")
    rng = np.random.default_rng(seed)
    return StructuredField(dims, rng.random(dims.num_points, dtype=np.float32))


def gen_random_volume(dims: Dims, seed: int = 0) -> StructuredField:
    """3D scalar volume with uniform [0, 1) values (seeded)."""
    rng = np.random.default_rng(seed)
    return StructuredField(dims, rng.random(dims.num_points, dtype=np.float32))

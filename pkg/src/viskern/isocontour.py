"""Marching Cubes isosurface extraction on 3D structured scalar grids.

Two paths produce byte-identical meshes:

* contour_serial - one pass over all cells on the calling thread
* contour_dpp    - classify -> scatter-count -> generate pipeline over the
                   data-parallel runtime

Corner values strictly above the isovalue set their case bit; values equal to
the isovalue count as below, so no zero-area triangles are emitted.  Vertices
are emitted per triangle without welding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import counters
from .field import StructuredField
from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRI_COUNT, TRI_TABLE
from .runtime import ExecConfig, build_scatter, dispatch_field_map_blocked

# logical float ops per emitted vertex: t = (iso-va)/(vb-va) is 3, the three
# coordinate blends are 3 each
VERTEX_INTERP_FLOPS = 12

_TRI_COUNT_ARR = np.asarray(TRI_COUNT, dtype=np.int64)


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle soup: vertices (n, 3) float64, triangles (m, 3) vertex indices."""

    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def num_triangles(self) -> int:
        return int(self.triangles.shape[0])


def _empty_mesh() -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def classify_cell(corner_values, isovalue: float) -> int:
    """Case index in [0, 255]: bit b set iff corner_values[b] > isovalue."""
    iso = float(isovalue)
    case = 0
    for b, v in enumerate(corner_values):
        v = float(v)
        if math.isnan(v):
            raise ValueError("NaN corner value")
        if v > iso:
            case |= 1 << b
    return case


def interpolate_edge(p0, p1, v0: float, v1: float, isovalue: float):
    """Point on segment p0-p1 where the field crosses isovalue; midpoint when
    the endpoint values are (nearly) equal."""
    v0 = float(v0)
    v1 = float(v1)
    isovalue = float(isovalue)
    d = v1 - v0
    if abs(d) < 1e-12:
        t = 0.5
    else:
        t = (isovalue - v0) / d
    return (
        p0[0] + t * (p1[0] - p0[0]),
        p0[1] + t * (p1[1] - p0[1]),
        p0[2] + t * (p1[2] - p0[2]),
    )


def _require_volume(f: StructuredField) -> None:
    if f.components != 1:
        raise ValueError("contouring requires a scalar field")
    if min(f.dims.as_tuple()) < 2:
        raise ValueError(f"contouring requires at least 2 points per axis, got {f.dims}")


class _CellGrid:
    """Shared per-run geometry: flat corner offsets and node coordinates."""

    def __init__(self, f: StructuredField):
        nx, ny, nz = f.dims.as_tuple()
        self.nx, self.ny, self.nz = nx, ny, nz
        self.cx, self.cy, self.cz = nx - 1, ny - 1, nz - 1
        self.num_cells = self.cx * self.cy * self.cz
        self.values = f.values
        self.origin = f.origin
        self.spacing = f.spacing
        self.corner_flat = tuple(
            (dk * ny + dj) * nx + di for (di, dj, dk) in CORNER_OFFSETS
        )

    def cell_ijk(self, cidx: int) -> tuple[int, int, int]:
        k, rem = divmod(cidx, self.cx * self.cy)
        j, i = divmod(rem, self.cx)
        return i, j, k

    def emit_cell(self, cidx: int, case: int, isovalue: float, verts, vbase: int) -> int:
        """Write the cell's triangle vertices into verts starting at row vbase;
        returns the number of vertices written.  Same scalar arithmetic on
        every path, so serial and DPP meshes match bitwise."""
        tri_edges = TRI_TABLE[case]
        if not tri_edges:
            return 0
        i, j, k = self.cell_ijk(cidx)
        base = (k * self.ny + j) * self.nx + i
        vals = self.values
        ox, oy, oz = self.origin
        sx, sy, sz = self.spacing
        corner_pos = []
        corner_val = []
        for c, (di, dj, dk) in enumerate(CORNER_OFFSETS):
            corner_pos.append((ox + sx * (i + di), oy + sy * (j + dj), oz + sz * (k + dk)))
            corner_val.append(float(vals[base + self.corner_flat[c]]))
        edge_point = {}
        mask = EDGE_TABLE[case]
        for e in range(12):
            if mask & (1 << e):
                a, b = EDGE_CORNERS[e]
                edge_point[e] = interpolate_edge(
                    corner_pos[a], corner_pos[b], corner_val[a], corner_val[b],
                    isovalue,
                )
        row = vbase
        for e in tri_edges:
            verts[row] = edge_point[e]
            row += 1
        return row - vbase


def contour_serial(f: StructuredField, isovalue: float) -> TriangleMesh:
    """Single-pass serial Marching Cubes."""
    _require_volume(f)
    grid = _CellGrid(f)
    vals = f.values
    if np.isnan(vals).any():
        raise ValueError("NaN corner value")
    iso = float(isovalue)  # classification compares in float64 on every path
    cases = bytearray(grid.num_cells)
    total_tris = 0
    corner_flat = grid.corner_flat
    nx, ny = grid.nx, grid.ny
    cx, cy = grid.cx, grid.cy
    for cidx in range(grid.num_cells):
        k, rem = divmod(cidx, cx * cy)
        j, i = divmod(rem, cx)
        base = (k * ny + j) * nx + i
        case = 0
        for b in range(8):
            if float(vals[base + corner_flat[b]]) > iso:
                case |= 1 << b
        cases[cidx] = case
        total_tris += TRI_COUNT[case]
    verts = np.empty((total_tris * 3, 3))
    vbase = 0
    for cidx, case in enumerate(cases):
        if TRI_COUNT[case]:
            vbase += grid.emit_cell(cidx, case, iso, verts, vbase)
    counters.add_flops(VERTEX_INTERP_FLOPS * total_tris * 3)
    if total_tris == 0:
        return _empty_mesh()
    tris = np.arange(total_tris * 3, dtype=np.int64).reshape(total_tris, 3)
    return TriangleMesh(verts, tris)


def contour_dpp(f: StructuredField, isovalue: float, cfg: ExecConfig,
                reclassify: bool = False) -> TriangleMesh:
    """Three-phase Marching Cubes over the DPP runtime: a field map over cells
    computing case indices and triangle counts, a scatter plan from the
    counts, and a field map writing each cell's triangles at its offset.

    With reclassify=True, phase 3 recomputes case indices from the corner
    values instead of reusing the phase-1 results.
    """
    _require_volume(f)
    grid = _CellGrid(f)
    ncells = grid.num_cells
    flat = f.values
    iso = float(isovalue)
    iso64 = np.float64(iso)  # force float64 comparison, matching the serial path
    cases = np.zeros(ncells, dtype=np.int16)
    tri_counts = np.zeros(ncells, dtype=np.int64)
    corner_flat = grid.corner_flat
    nx, ny = grid.nx, grid.ny
    cx, cy = grid.cx, grid.cy

    def classify_chunk(lo, hi):
        cidx = np.arange(lo, hi)
        k, rem = np.divmod(cidx, cx * cy)
        j, i = np.divmod(rem, cx)
        base = (k * ny + j) * nx + i
        case = np.zeros(hi - lo, dtype=np.int16)
        for b in range(8):
            corner = flat.take(base + corner_flat[b])
            if np.isnan(corner).any():
                raise ValueError("NaN corner value")
            case |= (corner > iso64).astype(np.int16) << b
        cases[lo:hi] = case
        tri_counts[lo:hi] = _TRI_COUNT_ARR.take(case)

    dispatch_field_map_blocked(classify_chunk, ncells, cfg)

    plan = build_scatter(tri_counts)
    if plan.total == 0:
        return _empty_mesh()
    verts = np.empty((plan.total * 3, 3))
    offsets = plan.offsets

    def generate_chunk(lo, hi):
        local = np.nonzero(tri_counts[lo:hi])[0]
        emitted = 0
        for off in local:
            cidx = lo + int(off)
            if reclassify:
                ci, cj, ck = grid.cell_ijk(cidx)
                base = (ck * ny + cj) * nx + ci
                case = 0
                for b in range(8):
                    if float(flat[base + corner_flat[b]]) > iso:
                        case |= 1 << b
            else:
                case = int(cases[cidx])
            emitted += grid.emit_cell(cidx, case, iso, verts,
                                      int(offsets[cidx]) * 3)
        counters.add_flops(VERTEX_INTERP_FLOPS * emitted)

    dispatch_field_map_blocked(generate_chunk, ncells, cfg)
    tris = np.arange(plan.total * 3, dtype=np.int64).reshape(plan.total, 3)
    return TriangleMesh(verts, tris)

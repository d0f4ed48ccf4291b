"""Writers for kernel outputs: binary STL and ASCII OBJ for triangle meshes,
plain polylines and OBJ line elements for streamlines."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .advection import Streamline
from .isocontour import TriangleMesh


def write_stl(mesh: TriangleMesh, path) -> Path:
    """Binary STL: 80-byte header, triangle count, then 50 bytes per facet."""
    path = Path(path)
    v = mesh.vertices
    t = mesh.triangles
    with open(path, "wb") as fh:
        fh.write(b"viskern isosurface".ljust(80, b"\0"))
        fh.write(struct.pack("<I", t.shape[0]))
        for a, b, c in t:
            p0, p1, p2 = v[a], v[b], v[c]
            n = np.cross(p1 - p0, p2 - p0)
            norm = float(np.linalg.norm(n))
            if norm > 0:
                n = n / norm
            fh.write(struct.pack("<3f", *n))
            fh.write(struct.pack("<3f", *p0))
            fh.write(struct.pack("<3f", *p1))
            fh.write(struct.pack("<3f", *p2))
            fh.write(struct.pack("<H", 0))
    return path


def write_obj_mesh(mesh: TriangleMesh, path) -> Path:
    """ASCII OBJ with v records and 1-based f records."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# viskern isosurface\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
    return path


def write_polylines(lines: list[Streamline], path) -> Path:
    """One "x y z" line per point, blank line between streamlines."""
    path = Path(path)
    with open(path, "w") as fh:
        for idx, line in enumerate(lines):
            if idx:
                fh.write("\n")
            for x, y, z in line.points:
                fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
    return path


def write_obj_lines(lines: list[Streamline], path) -> Path:
    """OBJ with v records and one l (polyline) element per streamline."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# viskern streamlines\n")
        base = 1
        for line in lines:
            for x, y, z in line.points:
                fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for line in lines:
            n = line.points.shape[0]
            if n >= 2:
                fh.write("l " + " ".join(str(base + i) for i in range(n)) + "\n")
            base += n
    return path

import numpy as np
import pytest

from viskern.field import Dims, StructuredField, gen_random_volume, gen_sphere_field
from viskern.isocontour import (
    TriangleMesh,
    classify_cell,
    contour_dpp,
    contour_serial,
    interpolate_edge,
)
from viskern.mc_tables import (
    CORNER_OFFSETS,
    EDGE_CORNERS,
    EDGE_TABLE,
    TRI_COUNT,
    TRI_TABLE,
)
from viskern.runtime import ExecConfig


def tiny_field(corner_values):
    return StructuredField(Dims(2, 2, 2), np.asarray(corner_values, dtype=np.float32))


def canonical_triangles(mesh: TriangleMesh):
    """Order-insensitive triangle multiset: each triangle's vertices sorted
    lexicographically, then the triangles sorted."""
    tris = []
    for a, b, c in mesh.triangles:
        pts = sorted(map(tuple, (mesh.vertices[a], mesh.vertices[b],
                                 mesh.vertices[c])))
        tris.append(tuple(pts))
    return sorted(tris)


def oracle_triangle_count(f: StructuredField, isovalue: float) -> int:
    """Independent per-cell classify-and-count via array slicing."""
    nx, ny, nz = f.dims.as_tuple()
    vals = f.values.reshape(nz, ny, nx)
    above = vals > np.float64(isovalue)
    bits = np.zeros((nz - 1, ny - 1, nx - 1), dtype=np.int64)
    for b, (di, dj, dk) in enumerate(CORNER_OFFSETS):
        bits |= (above[dk:dk + nz - 1, dj:dj + ny - 1, di:di + nx - 1]
                 .astype(np.int64) << b)
    return int(np.asarray(TRI_COUNT)[bits].sum())


# -- tables ---------------------------------------------------------------------


def test_tables_shape_and_degenerate_entries():
    assert len(EDGE_TABLE) == len(TRI_TABLE) == 256
    assert EDGE_TABLE[0] == EDGE_TABLE[255] == 0
    assert TRI_COUNT[0] == TRI_COUNT[255] == 0
    assert max(TRI_COUNT) <= 5


def test_tables_complement_symmetry():
    for c in range(256):
        assert EDGE_TABLE[c] == EDGE_TABLE[255 - c]
        assert TRI_COUNT[c] == TRI_COUNT[255 - c]


def test_tables_triangles_use_exactly_cut_edges():
    for c in range(256):
        used = 0
        for e in TRI_TABLE[c]:
            used |= 1 << e
        assert used == EDGE_TABLE[c]
        assert len(TRI_TABLE[c]) % 3 == 0


def test_edge_corners_touch_each_corner_three_times():
    touch = [0] * 8
    for a, b in EDGE_CORNERS:
        touch[a] += 1
        touch[b] += 1
    assert touch == [3] * 8


# -- classification and edge interpolation --------------------------------------


def test_classify_extremes():
    assert classify_cell([0.0] * 8, 1.0) == 0
    assert classify_cell([2.0] * 8, 1.0) == 255


def test_classify_equality_counts_as_below():
    vals = [1.0] * 8
    assert classify_cell(vals, 1.0) == 0


def test_classify_single_corner_gives_one_triangle():
    vals = [0.0] * 8
    vals[0] = 2.0
    case = classify_cell(vals, 1.0)
    assert case == 1
    assert TRI_COUNT[case] == 1


def test_classify_nan_rejected():
    vals = [0.0] * 8
    vals[3] = float("nan")
    with pytest.raises(ValueError):
        classify_cell(vals, 0.0)


def test_interpolate_edge_examples():
    p0, p1 = (0.0, 0.0, 0.0), (2.0, 0.0, 0.0)
    assert interpolate_edge(p0, p1, 0.0, 1.0, 0.5) == (1.0, 0.0, 0.0)
    assert interpolate_edge(p0, p1, 0.25, 1.0, 0.25) == p0
    got = interpolate_edge(p0, p1, 1.0, 4.0, 2.0)
    assert got[0] == pytest.approx(2.0 / 3.0, rel=1e-15)
    # (nearly) equal endpoint values -> midpoint
    assert interpolate_edge(p0, p1, 1.0, 1.0, 1.0) == (1.0, 0.0, 0.0)


# -- serial path ----------------------------------------------------------------


def test_all_above_or_below_gives_empty_mesh():
    f = gen_sphere_field(Dims(8, 8, 8), (3.5, 3.5, 3.5), 1.0)
    assert contour_serial(f, 100.0).num_triangles == 0
    assert contour_serial(f, -100.0).num_triangles == 0


def test_single_corner_cell_one_triangle():
    vals = np.zeros(8, dtype=np.float32)
    vals[0] = 2.0
    mesh = contour_serial(tiny_field(vals), 1.0)
    assert mesh.num_triangles == 1
    assert mesh.vertices.shape == (3, 3)
    # the three crossings sit on the edges incident to corner 0, at t = 0.5
    expected = {(0.5, 0.0, 0.0), (0.0, 0.5, 0.0), (0.0, 0.0, 0.5)}
    assert {tuple(v) for v in mesh.vertices} == expected


def test_sphere_count_matches_oracle():
    f = gen_sphere_field(Dims(32, 32, 32), (15.5, 15.5, 15.5), 9.0)
    mesh = contour_serial(f, 0.0)
    assert mesh.num_triangles > 0
    assert mesh.num_triangles == oracle_triangle_count(f, 0.0)
    assert not np.isnan(mesh.vertices).any()
    assert mesh.triangles.max() < mesh.vertices.shape[0]


def test_vertices_reinterpolate_to_isovalue():
    from viskern.field import interpolate

    f = gen_sphere_field(Dims(24, 24, 24), (11.5, 11.5, 11.5), 7.0)
    iso = 0.75
    mesh = contour_serial(f, iso)
    span = float(f.values.max() - f.values.min())
    worst = 0.0
    for v in mesh.vertices[::7]:
        val = interpolate(f, tuple(v))
        worst = max(worst, abs(val - iso))
    assert worst <= 1e-4 * span


def test_degenerate_dims_rejected():
    flat = StructuredField(Dims(4, 4, 1), np.zeros(16))
    with pytest.raises(ValueError):
        contour_serial(flat, 0.0)
    vec = StructuredField(Dims(4, 4, 4), np.zeros(64 * 3), components=3)
    with pytest.raises(ValueError):
        contour_serial(vec, 0.0)


def test_nan_field_rejected():
    vals = np.zeros(8, dtype=np.float32)
    vals[2] = np.nan
    with pytest.raises(ValueError):
        contour_serial(tiny_field(vals), 0.0)
    with pytest.raises(ValueError):
        contour_dpp(tiny_field(vals), 0.0, ExecConfig(1))


# -- DPP pipeline ----------------------------------------------------------------


def test_dpp_empty_case():
    f = gen_sphere_field(Dims(8, 8, 8), (3.5, 3.5, 3.5), 1.0)
    assert contour_dpp(f, 100.0, ExecConfig(2)).num_triangles == 0


def test_dpp_matches_serial_on_sphere():
    f = gen_sphere_field(Dims(32, 32, 32), (15.5, 15.5, 15.5), 9.0)
    serial = contour_serial(f, 0.0)
    dpp = contour_dpp(f, 0.0, ExecConfig(4, chunk_size=500))
    assert canonical_triangles(dpp) == canonical_triangles(serial)


def test_dpp_matches_serial_on_random_fields():
    for seed in range(4):
        f = gen_random_volume(Dims(10, 9, 8), seed=seed)
        serial = contour_serial(f, 0.5)
        dpp = contour_dpp(f, 0.5, ExecConfig(3, chunk_size=37))
        assert serial.num_triangles == oracle_triangle_count(f, 0.5)
        assert canonical_triangles(dpp) == canonical_triangles(serial)


def test_dpp_thread_determinism():
    f = gen_random_volume(Dims(12, 12, 12), seed=9)
    ref = contour_dpp(f, 0.5, ExecConfig(1))
    for threads in (2, 4, 8):
        got = contour_dpp(f, 0.5, ExecConfig(threads, chunk_size=101))
        assert np.array_equal(got.vertices, ref.vertices)
        assert np.array_equal(got.triangles, ref.triangles)


def test_dpp_reclassify_knob_identical():
    f = gen_random_volume(Dims(9, 9, 9), seed=2)
    base = contour_dpp(f, 0.5, ExecConfig(2))
    re = contour_dpp(f, 0.5, ExecConfig(2), reclassify=True)
    assert np.array_equal(base.vertices, re.vertices)


def test_phase_counts_conserved():
    # phase-1 count sum equals emitted triangle count
    f = gen_random_volume(Dims(8, 8, 8), seed=4)
    mesh = contour_dpp(f, 0.5, ExecConfig(2))
    assert mesh.num_triangles == oracle_triangle_count(f, 0.5)


def test_complement_symmetry_field_negation():
    for seed in (0, 3):
        f = gen_random_volume(Dims(9, 8, 7), seed=seed)
        neg = StructuredField(f.dims, -f.values.copy())
        a = contour_serial(f, 0.5)
        b = contour_serial(neg, -0.5)
        assert a.num_triangles == b.num_triangles
    s = gen_sphere_field(Dims(16, 16, 16), (7.5, 7.5, 7.5), 4.0)
    sneg = StructuredField(s.dims, -s.values.copy())
    assert (contour_serial(s, 0.25).num_triangles
            == contour_serial(sneg, -0.25).num_triangles)

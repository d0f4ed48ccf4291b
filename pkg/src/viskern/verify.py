"""Self-contained oracle checks behind `bench verify`.

Each check compares a kernel path against an independent reference (brute
force, analytic solution, or hand-enumerated values) and prints one PASS/FAIL
line.  These mirror the pytest suite but run without test dependencies.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from . import advection, counters, isocontour, stencil
from .bench import hash_output
from .field import Dims, gen_random_image, gen_rotational_field, gen_sphere_field
from .io import load_field, save_field
from .mc_tables import TRI_COUNT
from .runtime import ExecConfig, build_scatter, exclusive_scan


def _brute_force_smooth(image, kern):
    img = image.as_2d_array().astype(np.float64)
    ny, nx = img.shape
    r = kern.radius
    w = kern.weights
    out = np.empty((ny, nx), dtype=np.float32)
    for j in range(ny):
        for i in range(nx):
            s = 0.0
            den = 0.0
            for dj in range(-r, r + 1):
                jj = j + dj
                if jj < 0 or jj >= ny:
                    continue
                for di in range(-r, r + 1):
                    ii = i + di
                    if ii < 0 or ii >= nx:
                        continue
                    wv = w[dj + r, di + r]
                    s += wv * img[jj, ii]
                    den += wv
            out[j, i] = s / den
    return out


def check_gaussian_weights() -> bool:
    for size in range(1, 22, 2):
        for sigma in (0.1, 0.33, 1.0):
            k = stencil.build_gaussian_weights(size, sigma)
            if abs(k.weights.sum() - 1.0) > 1e-12:
                return False
            if not np.array_equal(k.weights, k.weights[::-1, :]):
                return False
            if not np.array_equal(k.weights, k.weights[:, ::-1]):
                return False
            if k.weights[k.radius, k.radius] < k.weights.max():
                return False
    return True


def check_stencil_equivalence() -> bool:
    image = gen_random_image(Dims(32, 32, 1), seed=7)
    kern = stencil.build_gaussian_weights(5, 0.33)
    oracle = _brute_force_smooth(image, kern)
    for threads in (1, 2):
        for fn in stencil.STRATEGIES.values():
            got = fn(image, kern, ExecConfig(threads)).as_2d_array()
            err = np.max(np.abs(got - oracle) / np.maximum(np.abs(oracle), 1e-30))
            if err > 1e-6:
                return False
    return True


def check_stencil_flops() -> bool:
    counters.set_backend_mode("SOFTWARE")
    try:
        image = gen_random_image(Dims(4, 4, 1), seed=1)
        kern = stencil.build_gaussian_weights(3, 0.33)
        counters.marker_start("verify/stencil")
        stencil.smooth_direct(image, kern, ExecConfig(1))
        counters.marker_stop("verify/stencil")
        got = counters.region_report("verify/stencil").sample.flops_scalar
        return got == 212 == stencil.expected_flops(4, 4, 3)
    finally:
        counters.set_backend_mode("AUTO")


def check_isocontour() -> bool:
    f = gen_sphere_field(Dims(16, 16, 16), (7.5, 7.5, 7.5), 4.0)
    serial = isocontour.contour_serial(f, 0.0)
    dpp = isocontour.contour_dpp(f, 0.0, ExecConfig(2, chunk_size=64))
    if hash_output("isocontour", serial) != hash_output("isocontour", dpp):
        return False
    # independent per-cell classify-and-count oracle
    vals = f.values.reshape(16, 16, 16)
    above = vals > np.float64(0.0)
    bits = np.zeros((15, 15, 15), dtype=np.int64)
    from .mc_tables import CORNER_OFFSETS

    for b, (di, dj, dk) in enumerate(CORNER_OFFSETS):
        bits |= above[dk:dk + 15, dj:dj + 15, di:di + 15].astype(np.int64) << b
    expected = int(np.asarray(TRI_COUNT)[bits].sum())
    return serial.num_triangles == expected


def check_mc_degenerate() -> bool:
    lo = np.zeros(8, dtype=np.float32)
    f_lo = isocontour.contour_serial(
        _tiny_field(lo), 1.0)
    hi = np.ones(8, dtype=np.float32)
    f_hi = isocontour.contour_serial(_tiny_field(hi), 0.5)
    one = np.zeros(8, dtype=np.float32)
    one[0] = 2.0
    f_one = isocontour.contour_serial(_tiny_field(one), 1.0)
    return (f_lo.num_triangles == 0 and f_hi.num_triangles == 0
            and f_one.num_triangles == 1)


def _tiny_field(corner_vals):
    from .field import StructuredField

    return StructuredField(Dims(2, 2, 2), corner_vals)


def check_rk4() -> bool:
    f = gen_rotational_field(Dims(8, 8, 8))
    p = advection.rk4_step(f, (1.0, 0.0, 0.0), 0.01)
    if p is None:
        return False
    err = math.hypot(p[0] - math.cos(0.01), p[1] - math.sin(0.01))
    if err > 1e-9:
        return False
    e1 = _one_step_error(f, 0.04)
    e2 = _one_step_error(f, 0.02)
    return 24.0 <= e1 / e2 <= 40.0


def _one_step_error(f, h):
    p = advection.rk4_step(f, (1.0, 0.0, 0.0), h)
    return math.hypot(p[0] - math.cos(h), p[1] - math.sin(h))


def check_advection_equivalence() -> bool:
    f = gen_rotational_field(Dims(16, 16, 16))
    seeds = advection.make_diagonal_seeds(f, 50)
    params = advection.IntegrationParams(0.05, 200)
    serial = advection.trace_serial(f, seeds, params)
    for threads in (1, 4):
        par = advection.trace_parallel_over_seeds(f, seeds, params,
                                                  ExecConfig(threads, chunk_size=8))
        if hash_output("advection", par) != hash_output("advection", serial):
            return False
    return True


def check_counter_math() -> bool:
    m = counters.derive_metrics(counters.CounterSample(instructions=50, cycles=100))
    if m.cpi != 2.0:
        return False
    m = counters.derive_metrics(counters.CounterSample(flops_scalar=1, flops_packed=3))
    if m.vectorization_pct != 75.0:
        return False
    m = counters.derive_metrics(counters.CounterSample(flops_scalar=4, flops_packed=0))
    if m.vectorization_pct != 0.0:
        return False
    m = counters.derive_metrics(counters.CounterSample(l3_requests=200, l3_misses=30))
    if m.l3_miss_ratio_pct != 15.0:
        return False
    m = counters.derive_metrics(counters.CounterSample())
    return m.cpi is None and m.vectorization_pct is None and m.l3_miss_ratio_pct is None


def check_scan_scatter() -> bool:
    if exclusive_scan([3, 1, 0, 2]).tolist() != [0, 3, 4, 4]:
        return False
    plan = build_scatter([1, 0, 2])
    return plan.offsets.tolist() == [0, 1, 1] and plan.total == 3


def check_dataset_roundtrip() -> bool:
    f = gen_sphere_field(Dims(9, 7, 5), (4.0, 3.0, 2.0), 2.5)
    with tempfile.TemporaryDirectory() as tmp:
        path = save_field(f, Path(tmp) / "sphere.json")
        loaded = load_field(path)
    return (loaded.dims == f.dims
            and np.array_equal(loaded.values, f.values)
            and loaded.origin == f.origin and loaded.spacing == f.spacing)


CHECKS = (
    ("gaussian weights normalized and symmetric", check_gaussian_weights),
    ("stencil strategies match brute-force oracle", check_stencil_equivalence),
    ("stencil FLOP tally matches window enumeration", check_stencil_flops),
    ("isocontour serial/DPP equal, count matches oracle", check_isocontour),
    ("marching cubes degenerate cases", check_mc_degenerate),
    ("RK4 matches analytic orbit at 5th order", check_rk4),
    ("advection parallel bitwise equals serial", check_advection_equivalence),
    ("derived counter metrics exact", check_counter_math),
    ("exclusive scan and scatter plans", check_scan_scatter),
    ("raw dataset round-trip", check_dataset_roundtrip),
)


def run_verification() -> int:
    failures = 0
    for label, fn in CHECKS:
        try:
            ok = fn()
        except Exception as e:  # a crash is a failure, keep going
            ok = False
            label = f"{label} ({type(e).__name__}: {e})"
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} of {len(CHECKS)} checks failed")
    else:
        print(f"all {len(CHECKS)} checks passed")
    return 1 if failures else 0

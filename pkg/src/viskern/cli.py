"""Command-line front end.

    bench run    - execute a strong-scaling sweep and emit reports
    bench verify - run the built-in oracle-equivalence checks
    bench info   - show counter backend availability

Counter backend selection comes from the VISKERN_COUNTERS environment
variable (AUTO | HARDWARE | SOFTWARE | NONE).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import counters
from .bench import (
    BenchConfig,
    KERNEL_STRATEGIES,
    KERNELS,
    emit_csv,
    emit_json,
    run_suite,
)
from .runtime import DEFAULT_CHUNK_SIZE

PRESETS = {
    # canonical experiment configurations on synthetic stand-in datasets
    "stencil-paper": dict(kernel="stencil", radius=19, sigma=0.33,
                          synthetic="random2d:5160x5220"),
    "iso-paper": dict(kernel="isocontour", isovalue=15.0,
                      synthetic="sphere3d:400"),
    "advect-paper": dict(kernel="advection", n_seeds=500, max_steps=1000,
                         synthetic="rotational3d:64"),
}


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p)


def _build_run_parser(sub) -> None:
    p = sub.add_parser("run", help="run a benchmark sweep")
    p.add_argument("--kernel", choices=KERNELS)
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="start from a named experiment preset")
    p.add_argument("--strategy", default=None,
                   help="comma-separated strategy names (default: all for the kernel)")
    p.add_argument("--threads", default="1,2,4", type=_parse_int_list,
                   metavar="1,2,4", help="ascending thread counts")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--dataset", help="descriptor .json of a raw dataset")
    p.add_argument("--synthetic", help="synthetic dataset spec, e.g. random2d:512x512")
    p.add_argument("--radius", type=int, default=None,
                   help="stencil window size R (odd)")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--isovalue", type=float, default=None)
    p.add_argument("--reclassify", action="store_true",
                   help="isocontour DPP phase 3 recomputes cell cases")
    p.add_argument("--seeds", type=int, default=None, help="advection seed count")
    p.add_argument("--steps", type=int, default=None, help="advection max steps")
    p.add_argument("--h", type=float, default=None, dest="step_size",
                   help="advection step size (default 0.25*min spacing)")
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--no-warmup", action="store_true")
    p.add_argument("--out", default="bench-out", help="output directory")
    p.add_argument("--emit", default="csv",
                   help="comma-separated outputs: csv,json,svg")


def _config_from_args(args) -> BenchConfig:
    values: dict = {}
    if args.preset:
        values.update(PRESETS[args.preset])
    if args.kernel:
        values["kernel"] = args.kernel
    if "kernel" not in values:
        raise SystemExit("error: --kernel or --preset is required")
    kernel = values["kernel"]
    if args.strategy:
        values["strategies"] = tuple(args.strategy.split(","))
    else:
        values.setdefault("strategies", KERNEL_STRATEGIES[kernel])
    for name, key in (("radius", "radius"), ("sigma", "sigma"),
                      ("isovalue", "isovalue"), ("seeds", "n_seeds"),
                      ("steps", "max_steps"), ("step_size", "step_size"),
                      ("dataset", "dataset"), ("synthetic", "synthetic")):
        v = getattr(args, name)
        if v is not None:
            values[key] = v
    if args.dataset and not args.synthetic:
        values.pop("synthetic", None)  # --dataset replaces a preset's source
    values["thread_counts"] = args.threads
    values["repetitions"] = args.reps
    values["chunk_size"] = args.chunk_size
    values["rng_seed"] = args.rng_seed
    values["warmup"] = not args.no_warmup
    if args.reclassify:
        values["reclassify"] = True
    return BenchConfig(**values)


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_suite(config)

    emits = {e.strip() for e in args.emit.split(",") if e.strip()}
    unknown = emits - {"csv", "json", "svg"}
    if unknown:
        raise SystemExit(f"error: unknown --emit formats {sorted(unknown)}")
    written = []
    if "csv" in emits:
        path = out_dir / f"{config.kernel}.csv"
        emit_csv(records, path)
        written.append(path)
    if "json" in emits:
        path = out_dir / f"{config.kernel}.json"
        emit_json(records, path)
        written.append(path)
    if "svg" in emits:
        from .plots import emit_plots  # defer matplotlib import

        written.extend(emit_plots(records, out_dir))

    def fmt(v, spec=".4g"):
        return "N/A" if v is None else format(v, spec)

    print(f"{'strategy':>20} {'threads':>7} {'rep':>3} {'runtime_s':>10} "
          f"{'flops':>12} {'cpi':>6} {'speedup':>8}")
    for r in records:
        print(f"{r.strategy:>20} {r.threads:>7} {r.rep:>3} "
              f"{r.runtime_s:>10.4f} {fmt(r.flops_scalar, 'd'):>12} "
              f"{fmt(r.cpi):>6} {fmt(r.speedup):>8}")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_info(_args) -> int:
    registry = counters.get_registry()
    print(f"counter backend mode: {registry.backend_mode} "
          f"(set {counters.ENV_VAR} to AUTO|HARDWARE|SOFTWARE|NONE)")
    print(f"software FLOP tallies: "
          f"{'on' if registry.software_enabled else 'off'}")
    from .perf_backend import hardware_backend_open

    backend = hardware_backend_open()
    if backend is None:
        print("hardware counters: unavailable on this platform")
    else:
        print(f"hardware counters: {', '.join(backend.counter_names)}")
        backend.close()
    print(f"cpus: {os.cpu_count()}")
    return 0


def _cmd_verify(_args) -> int:
    from .verify import run_verification

    return run_verification()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        prog="bench",
        description="visualization-kernel benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    _build_run_parser(sub)
    sub.add_parser("verify", help="run oracle-equivalence self checks")
    sub.add_parser("info", help="show counter backend availability")
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "info":
            return _cmd_info(args)
        return _cmd_verify(args)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

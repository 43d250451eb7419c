"""``nlsefd`` command line: run, stability, converge, bench.

Exit codes: 0 success, 2 configuration error, 3 divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .boundary import BoundaryKind
from .config import ConfigError, RunConfig, load_config, parse_shape
from .engine import TiledEngine, plan_tiles
from .field import ComplexField, Precision
from .frames import Frame, write_frame, write_frame_csv
from .integrator import DivergenceError, IntegratorState, integrate_chunk
from .problems import default_center, soliton_error
from .stability import StabilityError, check_time_step, stability_bounds
from .stencil import SchemeKind
from .studies import chunk_study, parallel_study, soliton_convergence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _core_samples(psi: ComplexField, center) -> list:
    """|psi|^2 at the corners of the grid cell holding ``center``."""
    grid = psi.grid
    lo = []
    for d in range(grid.dim):
        i = int(np.floor((center[d] - grid.origin[d]) / grid.h))
        lo.append(min(max(i, 0), grid.counts[d] - 2))
    m2 = psi.modulus_squared()
    out = []
    for offs in np.ndindex(*(2,) * grid.dim):
        idx = [lo[d] + offs[d] for d in range(grid.dim)]
        out.append({"index": idx, "abs2": float(m2[tuple(reversed(idx))])})
    return out


def frame_summary(cfg: RunConfig, psi: ComplexField, time_value: float) -> dict:
    m2 = psi.modulus_squared()
    out = {"min_abs2": float(m2.min()), "max_abs2": float(m2.max())}
    if cfg.problem == "soliton":
        out["error"] = soliton_error(psi, time_value, cfg.soliton_params(), cfg.a, cfg.s)
    else:
        center = cfg.center if cfg.center is not None else default_center(psi.grid)
        out["core_samples"] = _core_samples(psi, center)
    return out


def run(cfg: RunConfig, log=print) -> tuple:
    """Execute a configured run; returns ``(exit_code, summary)``."""
    k_dt, chunk, n_frames = cfg.schedule()
    report = cfg.stability()
    check_time_step(k_dt, report, cfg.force_dt)
    params = cfg.sim_params()
    psi0 = cfg.initial_field()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    state = IntegratorState.create(psi0, params)
    engine = None
    if cfg.workers > 1 or cfg.tile is not None:
        engine = TiledEngine(plan_tiles(state.grid, cfg.tile, cfg.workers))
    x = state.grid.axis_coords(0) if cfg.dim == 1 else None

    def emit(index: int, wall: float | None) -> dict:
        frame = Frame.from_field(state.psi, k_dt=k_dt, a=cfg.a, s=cfg.s, time=state.time,
                                 step_count=state.step_count)
        path = write_frame(out / f"frame_{index:05d}.nlf", frame)
        if cfg.csv and x is not None:
            write_frame_csv(out / f"frame_{index:05d}.csv", frame, x)
        entry = {"index": index, "file": path.name, "step": state.step_count, "time": state.time,
                 "wall_seconds": wall}
        entry.update(frame_summary(cfg, state.psi, state.time))
        return entry

    summary = {
        "config": cfg.as_dict(),
        "k_dt": k_dt,
        "chunk_size": chunk,
        "n_frames": n_frames,
        "total_steps": chunk * n_frames,
        "stability": report.as_dict(),
        "diverged": False,
        "frames": [emit(0, None)],
    }
    code = EXIT_OK
    try:
        for index in range(1, n_frames + 1):
            t0 = time.perf_counter()
            if engine is not None:
                engine.integrate_chunk(state, params, chunk)
            else:
                integrate_chunk(state, params, chunk)
            wall = time.perf_counter() - t0
            entry = emit(index, wall)
            summary["frames"].append(entry)
            log(f"frame {index}/{n_frames}  t={state.time:.6g}  wall={wall:.3f}s")
    except DivergenceError as exc:
        summary["diverged"] = True
        summary["divergence"] = {"step": exc.step, "time": exc.time}
        log(f"error: {exc}; {len(summary['frames'])} frame(s) kept in {out}")
        code = EXIT_DIVERGED
    finally:
        if engine is not None:
            engine.close()
    summary["msd_floor_hits"] = state.diagnostics["msd_floor_hits"]
    last = summary["frames"][-1]
    if "error" in last:
        summary["final_error"] = last["error"]
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return code, summary


def _write_rows(rows: list, dest) -> None:
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if dest:
        Path(dest).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlsefd", description="Explicit finite-difference NLSE integrator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--precision", choices=[m.value for m in Precision])
        sp.add_argument("--scheme", choices=[m.value for m in SchemeKind])

    r = sub.add_parser("run", help="integrate a configured problem and write frames")
    common(r)
    r.add_argument("--config", type=Path)
    r.add_argument("--problem", choices=["soliton", "vortex2d", "vortex_ring"])
    r.add_argument("--bc", choices=[m.value for m in BoundaryKind])
    r.add_argument("--tile")
    r.add_argument("--workers", type=int)
    r.add_argument("--chunk-size", type=int)
    r.add_argument("--frames", type=int)
    r.add_argument("--t-end", type=float)
    r.add_argument("--dt", type=float)
    r.add_argument("--force-dt", action="store_true", default=None)
    r.add_argument("--csv", action="store_true", default=None)
    r.add_argument("--out", type=Path)

    s = sub.add_parser("stability", help="print the linear stability bound")
    common(s)
    s.add_argument("--dim", "-d", type=int, required=True)
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--json", action="store_true", help="machine-readable output")

    c = sub.add_parser("converge", help="observed order of accuracy on the 1D soliton")
    common(c)
    c.add_argument("--h-list", default="0.2,0.1,0.05")
    c.add_argument("--t-end", type=float, default=5.0)
    c.add_argument("--half-width", type=float, default=25.0)
    c.add_argument("--bc", choices=[m.value for m in BoundaryKind], default="msd")
    c.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="chunk-size and serial/parallel timing studies")
    common(b)
    b.add_argument("--study", choices=["chunk", "parallel", "both"], default="both")
    b.add_argument("--n", type=int, default=100_000, help="1D grid points")
    b.add_argument("--steps", type=int, default=1000)
    b.add_argument("--chunk-sizes", default="1,10,100,1000")
    b.add_argument("--workers", default="1,2,4")
    b.add_argument("--tile", action="append", help="tile shape; repeat for several")
    b.add_argument("--repeats", type=int, default=1)
    b.add_argument("--out", type=Path, help="CSV path (default stdout)")
    return p


def _cmd_run(args) -> int:
    overrides = {
        "problem": args.problem,
        "precision": args.precision,
        "scheme": args.scheme,
        "bc": args.bc,
        "tile": args.tile,
        "workers": args.workers,
        "chunk_size": args.chunk_size,
        "n_frames": args.frames,
        "t_end": args.t_end,
        "dt": args.dt,
        "force_dt": args.force_dt,
        "csv": args.csv,
        "out": args.out,
    }
    if args.config is not None:
        cfg = load_config(args.config, **overrides)
    else:
        cfg = RunConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})
    code, _ = run(cfg, log=lambda m: print(m, file=sys.stderr))
    print(str(Path(cfg.out) / "summary.json"))
    return code


def _cmd_stability(args) -> int:
    rep = stability_bounds(args.dim, args.a, args.h, args.scheme or "cd")
    if args.json:
        print(json.dumps(rep.as_dict()))
    else:
        print(f"scheme={rep.scheme.value} d={rep.d} a={rep.a:g} h={rep.h:g}")
        print(f"k_max_linear  = {rep.k_max_linear:.7g}")
        print(f"k_recommended = {rep.k_recommended:.7g}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    rows = soliton_convergence(args.scheme or "cd", _floats(args.h_list), t_end=args.t_end,
                               half_width=args.half_width, bc=args.bc,
                               precision=args.precision or "double")
    if args.json:
        print(json.dumps([r.__dict__ for r in rows]))
        return EXIT_OK
    print(f"{'h':>10} {'k_dt':>12} {'error':>12} {'order':>7}")
    for r in rows:
        order = "" if r.order is None else f"{r.order:.3f}"
        print(f"{r.h:>10g} {r.k_dt:>12.6g} {r.error:>12.4e} {order:>7}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    scheme = args.scheme or ("cd" if args.study == "chunk" else "2shoc")
    precision = args.precision or "double"
    rows = []
    if args.study in ("chunk", "both"):
        rows += chunk_study(args.n, args.steps, _ints(args.chunk_sizes), scheme=scheme,
                            precision=precision, repeats=args.repeats)
    if args.study in ("parallel", "both"):
        tiles = [parse_shape(t, 1) for t in args.tile] if args.tile else None
        rows += parallel_study(args.n, args.steps, _ints(args.workers), tiles, scheme=scheme,
                               precision=precision, repeats=args.repeats)
    _write_rows(rows, args.out)
    for r in rows:
        if r.get("perf_warning"):
            print(f"WARNING perf-smoke: {r['perf_warning']}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "stability": _cmd_stability, "converge": _cmd_converge, "bench": _cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, StabilityError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

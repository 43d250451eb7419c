"""Convergence and timing studies behind the ``converge`` and ``bench`` commands."""
from __future__ import annotations

import math
import os
import time
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_positive
from .boundary import BoundaryKind
from .engine import TiledEngine, plan_tiles
from .field import ComplexField, GridSpec, Precision
from .integrator import IntegratorState, SimParams, integrate_chunk
from .problems import SolitonParams, soliton_error, soliton_init
from .stability import stability_bounds
from .stencil import SchemeKind

PERF_SPEEDUP_TARGET = 1.5


class PerformanceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    k_dt: float
    n_steps: int
    error: float
    order: float | None


def soliton_convergence(scheme, h_list, *, t_end: float = 5.0, half_width: float = 25.0,
                        bc=BoundaryKind.MSD, precision=Precision.DOUBLE, a: float = 1.0,
                        s: float = -1.0, sp: SolitonParams = SolitonParams()) -> list:
    """Max-norm soliton error at ``t_end`` for each ``h``.

    The domain is ``[-half_width, half_width]``; ``2 * half_width / h`` must be
    an integer.  The step is the largest ``t_end / n`` not above the
    recommended bound.  ``order`` compares each row with the previous one,
    ``log2(e_prev / e) / log2(h_prev / h)``.
    """
    h_list = [check_positive(h, "h") for h in h_list]
    if len(h_list) < 2:
        raise ValueError(f"a convergence study needs at least two h values, got {len(h_list)}")
    check_positive(t_end, "t_end")
    rows = []
    for h in h_list:
        cells = 2.0 * half_width / h
        if abs(cells - round(cells)) > 1e-9 * cells:
            raise ValueError(f"h={h} does not divide the domain width {2 * half_width}")
        grid = GridSpec.centered(1, int(round(cells)) + 1, h)
        rep = stability_bounds(1, a, h, scheme)
        n = math.ceil(t_end / rep.k_recommended)
        params = SimParams(a=a, s=s, k_dt=t_end / n, scheme=scheme, bc=bc, precision=precision)
        state = IntegratorState.create(soliton_init(grid, sp, a, s), params)
        integrate_chunk(state, params, n)
        err = soliton_error(state.psi, state.time, sp, a, s)["max_abs"]
        order = None
        if rows:
            prev = rows[-1]
            order = math.log2(prev.error / err) / math.log2(prev.h / h)
        rows.append(ConvergenceRow(h, params.k_dt, n, err, order))
    return rows


def chunked_run(psi: ComplexField, params: SimParams, total_steps: int, chunk_size: int,
                plan=None) -> tuple:
    """Integrate ``total_steps`` in calls of ``chunk_size`` steps.

    Every call starts from the field returned by the previous one, allocating
    fresh scratch and handing back a copy, as a caller collecting frames
    would.  Returns ``(final_field, per_chunk_seconds)``.
    """
    total_steps = check_int(total_steps, "total_steps", 0)
    chunk_size = check_int(chunk_size, "chunk_size", 1)
    times = []
    step_count = 0
    engine = TiledEngine(plan) if plan is not None else None
    try:
        while step_count < total_steps:
            n = min(chunk_size, total_steps - step_count)
            t0 = time.perf_counter()
            state = IntegratorState.create(psi, params, step_count=step_count)
            if engine is None:
                integrate_chunk(state, params, n)
            else:
                engine.integrate_chunk(state, params, n)
            psi = state.snapshot()
            times.append(time.perf_counter() - t0)
            step_count = state.step_count
    finally:
        if engine is not None:
            engine.close()
    return psi, times


def _bench_field(n: int, precision) -> ComplexField:
    grid = GridSpec.centered(1, n, 0.1)
    return soliton_init(grid, SolitonParams(), 1.0, -1.0, precision=precision)


def chunk_study(n_points: int, total_steps: int, chunk_sizes, *, scheme=SchemeKind.CD,
                precision=Precision.DOUBLE, repeats: int = 1) -> list:
    """Wall time versus chunk size on a 1D soliton.

    ``slowdown`` is each run's time divided by the time of the single-chunk
    run (``chunk_size == total_steps``, always included), so it is 1.0 there
    and larger for runs that return to the caller more often.
    """
    total_steps = check_int(total_steps, "total_steps", 1)
    repeats = check_int(repeats, "repeats", 1)
    sizes = sorted({check_int(c, "chunk_size", 1) for c in chunk_sizes} | {total_steps})
    if sizes[-1] > total_steps:
        raise ValueError(f"chunk sizes must not exceed total_steps={total_steps}")
    psi = _bench_field(n_points, precision)
    params = SimParams(k_dt=stability_bounds(1, 1.0, 0.1, scheme).k_recommended, scheme=scheme,
                       precision=precision)
    best = {}
    for _ in range(repeats):
        for c in sizes:
            t0 = time.perf_counter()
            chunked_run(psi, params, total_steps, c)
            dt = time.perf_counter() - t0
            best[c] = min(best.get(c, math.inf), dt)
    ref = best[total_steps]
    return [
        {"study": "chunk", "n_points": n_points, "total_steps": total_steps, "chunk_size": c,
         "n_chunks": math.ceil(total_steps / c), "seconds": best[c], "slowdown": best[c] / ref}
        for c in sizes
    ]


def parallel_study(n_points: int, n_steps: int, workers_list, tile_shapes=None, *,
                   scheme=SchemeKind.SHOC2, precision=Precision.DOUBLE, repeats: int = 1) -> list:
    """Serial versus tiled-engine wall time on a 1D soliton.

    ``speedup`` is serial time over parallel time; values below
    :data:`PERF_SPEEDUP_TARGET` at four or more workers and a million points
    or more raise a :class:`PerformanceWarning` and set ``perf_warning``.
    """
    n_steps = check_int(n_steps, "n_steps", 1)
    repeats = check_int(repeats, "repeats", 1)
    psi = _bench_field(n_points, precision)
    params = SimParams(k_dt=stability_bounds(1, 1.0, 0.1, scheme).k_recommended, scheme=scheme,
                       precision=precision)
    tile_shapes = list(tile_shapes) if tile_shapes else [None]

    def timed(fn):
        best = math.inf
        for _ in range(repeats):
            state = IntegratorState.create(psi, params)
            t0 = time.perf_counter()
            fn(state)
            best = min(best, time.perf_counter() - t0)
        return best

    serial = timed(lambda st: integrate_chunk(st, params, n_steps))
    rows = [{"study": "parallel", "n_points": n_points, "n_steps": n_steps, "workers": 0, "tile": "serial",
             "seconds": serial, "speedup": 1.0, "perf_warning": ""}]
    for w in workers_list:
        w = check_int(w, "workers", 1)
        for tile in tile_shapes:
            plan = plan_tiles(psi.grid, tile, w)
            with TiledEngine(plan) as engine:
                sec = timed(lambda st: engine.integrate_chunk(st, params, n_steps))
            speedup = serial / sec
            note = ""
            if w >= 4 and n_points >= 10**6 and speedup < PERF_SPEEDUP_TARGET:
                note = (f"speedup {speedup:.2f} below {PERF_SPEEDUP_TARGET} with {w} workers "
                        f"(machine has {_cpu_count()} CPUs)")
                warnings.warn(note, PerformanceWarning, stacklevel=2)
            rows.append({"study": "parallel", "n_points": n_points, "n_steps": n_steps, "workers": w,
                         "tile": "x".join(map(str, plan.tile_shape)), "seconds": sec, "speedup": speedup,
                         "perf_warning": note})
    return rows


def _cpu_count() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def is_non_increasing(values, rel_tol: float = 0.1) -> bool:
    """True when every value is at most ``(1 + rel_tol)`` times its predecessor."""
    vals = np.asarray(list(values), dtype=float)
    return bool(np.all(vals[1:] <= vals[:-1] * (1.0 + rel_tol)))

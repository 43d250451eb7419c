"""Tiled, phase-barriered executor for the low-storage RK4 schedule.

The grid is cut into tiles.  Each tile owns a block of points and sees that
block widened by a one-cell halo.  One RK4 step is four compute-F phases
(eight phases for 2SHOC, a compute-D phase before each F).  Every phase runs
in two sub-phases separated by a barrier:

* interior: each tile copies its halo-widened block of the stage input (and
  of ``V`` and ``D``) into tile-local scratch, evaluates the stencil and
  publishes F (or D) at its owned interior points;
* boundary: each tile fills its owned boundary points from the boundary
  condition, which may read the freshly published value at an inward
  neighbor owned by another tile, then applies the RK4 update to its whole
  owned block.

Within a sub-phase tiles only write their own points and never read a value
written in the same sub-phase by someone else, so the output is independent
of tile shape, worker count and execution order.  Tiles are assigned to
workers round-robin.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_int
from .boundary import BoundaryPoints, apply_laplacian, apply_time_derivative, boundary_points
from .field import GridSpec, Workspace
from .integrator import (
    IntegratorState,
    SimParams,
    StepConstants,
    finish_step,
    f_interior,
    stage_update,
)
from .stencil import SchemeKind, cd_inner, interior, shoc2_inner

DEFAULT_TILE = {1: (512,), 2: (16, 16), 3: (8, 8, 8)}
HALO = 1


@dataclass(frozen=True, eq=False)
class Tile:
    """One tile; slice tuples are in numpy axis order (slowest first)."""

    index: tuple
    owned: tuple
    box: tuple
    inner: tuple
    points: BoundaryPoints

    @property
    def extent(self) -> tuple:
        """Owned extent in x, y, z order."""
        return tuple(reversed([s.stop - s.start for s in self.owned]))

    @property
    def origin(self) -> tuple:
        return tuple(reversed([s.start for s in self.owned]))


@dataclass(frozen=True, eq=False)
class TilePlan:
    grid: GridSpec
    tile_shape: tuple
    tiles: tuple
    worker_count: int

    @property
    def tile_counts(self) -> tuple:
        return tuple(math.ceil(n / t) for n, t in zip(self.grid.counts, self.tile_shape))

    def worker_tiles(self, worker: int) -> tuple:
        return self.tiles[worker :: self.worker_count]


def _parse_tile_shape(grid: GridSpec, tile_shape) -> tuple:
    if tile_shape is None:
        return DEFAULT_TILE[grid.dim]
    if isinstance(tile_shape, (int, np.integer)):
        tile_shape = (int(tile_shape),) * grid.dim
    tile_shape = tuple(tile_shape)
    if len(tile_shape) != grid.dim:
        raise ValueError(f"tile_shape needs {grid.dim} entries for a {grid.dim}D grid, got {tile_shape}")
    for i, t in enumerate(tile_shape):
        t = check_int(t, f"tile_shape[{i}]", 1)
        if t < 2:
            raise ValueError(f"tile_shape entries must be >= 2 (got {t} along {'xyz'[i]})")
    return tuple(int(t) for t in tile_shape)


def plan_tiles(grid: GridSpec, tile_shape=None, worker_count: int = 1) -> TilePlan:
    """Cover ``grid`` with tiles of ``tile_shape`` (x first); edge tiles are truncated."""
    tile_shape = _parse_tile_shape(grid, tile_shape)
    worker_count = check_int(worker_count, "worker_count", 1)
    shape = grid.shape
    axis_tiles = tuple(reversed(tile_shape))
    pts = boundary_points(grid)
    coords = np.unravel_index(pts.flat, shape)
    ranges = [range(math.ceil(n / t)) for n, t in zip(shape, axis_tiles)]
    tiles = []
    for idx in np.ndindex(*[len(r) for r in ranges]):
        owned, box, inner = [], [], []
        mask = np.ones(len(pts), dtype=bool)
        for ax, (i, n, t) in enumerate(zip(idx, shape, axis_tiles)):
            lo, hi = i * t, min((i + 1) * t, n)
            blo, bhi = max(lo - HALO, 0), min(hi + HALO, n)
            owned.append(slice(lo, hi))
            box.append(slice(blo, bhi))
            inner.append(slice(blo + 1, max(bhi - 1, blo + 1)))
            mask &= (coords[ax] >= lo) & (coords[ax] < hi)
        tiles.append(Tile(tuple(reversed(idx)), tuple(owned), tuple(box), tuple(inner), pts.subset(mask)))
    return TilePlan(grid, tile_shape, tuple(tiles), worker_count)


@dataclass(frozen=True)
class Phase:
    """One kernel-equivalent pass; ``kind`` is ``"D"`` or ``"F"``."""

    kind: str
    stage: int
    source: str
    target: str | None = None

    def accesses(self, scheme: SchemeKind) -> dict:
        """Fields read at points owned by other tiles, and fields written, per sub-phase.

        Regions are ``"all"``, ``"interior"`` or ``"boundary"``.
        """
        if self.kind == "D":
            return {
                "interior": {"remote_reads": {(self.source, "all")}, "writes": {("d", "interior")}},
                "boundary": {
                    "remote_reads": {(self.source, "interior"), ("d", "interior"), ("v", "interior")},
                    "writes": {("d", "boundary")},
                },
            }
        reads = {(self.source, "all"), ("v", "all")}
        if scheme is SchemeKind.SHOC2:
            reads.add(("d", "all"))
        writes = {("k", "boundary"), (self.target, "all"), ("k_tot", "all")}
        return {
            "interior": {"remote_reads": reads, "writes": {("k", "interior")}},
            "boundary": {"remote_reads": {(self.source, "interior"), ("k", "interior")}, "writes": writes},
        }


_F_STAGES = (("psi", "psi_tmp"), ("psi_tmp", "psi_out"), ("psi_out", "psi_tmp"), ("psi_tmp", "psi"))


def phase_schedule(scheme) -> tuple:
    phases = []
    for stage, (src, dst) in enumerate(_F_STAGES, start=1):
        if scheme is SchemeKind.SHOC2:
            phases.append(Phase("D", stage, src))
        phases.append(Phase("F", stage, src, dst))
    return tuple(phases)


class _Scratch:
    """Tile-local working arrays (the shared-memory analog).

    Halo-widened blocks are copied into buffers owned by the tile and reused
    across phases; ``count`` is the number of arrays touched in one phase.
    """

    def __init__(self, box: Workspace, inner: Workspace, copy: bool):
        self.box = box
        self.inner = inner
        self.copy = copy
        self.count = 0

    def load(self, name, arr, box):
        self.count += 1
        if not self.copy:
            return arr[box]
        buf = self.box[name]
        np.copyto(buf, arr[box])
        return buf

    def local(self, name):
        self.count += 1
        return self.inner[name]


class TiledEngine:
    """Runs RK4 phases over a :class:`TilePlan` on a thread pool.

    ``copy_halo=False`` reads the global arrays through views instead of
    copying each tile's block first; results are identical.
    """

    def __init__(self, plan: TilePlan, copy_halo: bool = True):
        self.plan = plan
        self.copy_halo = copy_halo
        self.scratch_counts: dict = {}
        self._work: dict = {}
        self._pool = ThreadPoolExecutor(plan.worker_count) if plan.worker_count > 1 else None
        # test hook: evaluate boundary F before the interior sub-phase barrier
        self._boundary_first = False

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _run_group(self, fn, tiles):
        # errstate is thread-local; divergence is reported by DivergenceError
        with np.errstate(over="ignore", invalid="ignore"):
            return sum(fn(t) for t in tiles)

    def _map(self, fn) -> int:
        """Apply ``fn`` to every tile; returns once all tiles are done (barrier)."""
        plan = self.plan
        if self._pool is None:
            return self._run_group(fn, plan.tiles)
        futures = [self._pool.submit(self._run_group, fn, plan.worker_tiles(w)) for w in range(plan.worker_count)]
        return sum(f.result() for f in futures)

    def _note_scratch(self, key, count):
        self.scratch_counts[key] = max(self.scratch_counts.get(key, 0), count)

    def _pad(self, tile, dtype) -> _Scratch:
        key = (tile.index, dtype)
        ws = self._work.get(key)
        if ws is None:
            box_shape = tuple(s.stop - s.start for s in tile.box)
            ws = self._work[key] = (Workspace(box_shape, dtype), Workspace(tuple(n - 2 for n in box_shape), dtype))
        return _Scratch(ws[0], ws[1], self.copy_halo)

    def _d_interior(self, tile, src, d, c):
        pad = self._pad(tile, src.dtype)
        ur, ui = pad.load("ur", src.re, tile.box), pad.load("ui", src.im, tile.box)
        t0 = pad.inner["t0"]
        cd_inner(ur, c.stencil, out=d.re[tile.inner], tmp=t0)
        cd_inner(ui, c.stencil, out=d.im[tile.inner], tmp=t0)
        self._note_scratch("D", pad.count)
        return 0

    def _f_interior(self, tile, src, fields, scheme, c):
        pad = self._pad(tile, src.dtype)
        w = pad.inner
        ur, ui = pad.load("ur", src.re, tile.box), pad.load("ui", src.im, tile.box)
        vv = pad.load("v", fields["v"], tile.box)
        if scheme is SchemeKind.SHOC2:
            d = fields["d"]
            dr, di = pad.load("dr", d.re, tile.box), pad.load("di", d.im, tile.box)
            lr = shoc2_inner(ur, dr, c.stencil, out=w["lap_re"], tmp=w["t0"], tmp2=w["t1"])
            li = shoc2_inner(ui, di, c.stencil, out=w["lap_im"], tmp=w["t0"], tmp2=w["t1"])
        else:
            lr = cd_inner(ur, c.stencil, out=w["lap_re"], tmp=w["t0"])
            li = cd_inner(ui, c.stencil, out=w["lap_im"], tmp=w["t0"])
        ci = interior(ur.ndim)
        kr, ki = pad.local("kr"), pad.local("ki")
        f_interior(ur[ci], ui[ci], vv[ci], lr, li, c, fr=kr, fi=ki, sm=w["t0"], tmp=w["t1"])
        k = fields["k"]
        k.re[tile.inner] = kr
        k.im[tile.inner] = ki
        self._note_scratch("F", pad.count)
        return 0

    def _f_bc(self, tile, src, fields, params, c):
        k = fields["k"]
        return apply_time_derivative(params.bc, c.bound, tile.points, src.re, src.im, fields["v"], k.re, k.im)

    def _f_update(self, tile, stage, fields, target, c):
        o = tile.owned
        psi, k_tot, k = fields["psi"], fields["k_tot"], fields["k"]
        stage_update(stage, c, psi.re[o], k_tot.re[o], k.re[o], target.re[o])
        stage_update(stage, c, psi.im[o], k_tot.im[o], k.im[o], target.im[o])
        return 0

    def run_phase(self, phase: Phase, fields: dict, params: SimParams, c: StepConstants) -> int:
        """Execute one phase over all tiles; returns MSD division-floor hits."""
        src = fields[phase.source]
        v = fields["v"]
        if phase.kind == "D":
            d = fields["d"]
            self._map(lambda t: self._d_interior(t, src, d, c))
            return self._map(
                lambda t: apply_laplacian(params.bc, c.bound, t.points, src.re, src.im, v, d.re, d.im)
            )
        target = fields[phase.target]
        hits = 0
        if self._boundary_first:
            hits += self._map(lambda t: self._f_bc(t, src, fields, params, c))
        self._map(lambda t: self._f_interior(t, src, fields, params.scheme, c))

        def boundary(t):
            n = 0 if self._boundary_first else self._f_bc(t, src, fields, params, c)
            self._f_update(t, phase.stage, fields, target, c)
            return n

        return hits + self._map(boundary)

    def step(self, state: IntegratorState, params: SimParams, c: StepConstants | None = None) -> None:
        c = c or StepConstants.create(state.grid, params)
        fields = {
            "psi": state.psi,
            "psi_tmp": state.psi_tmp,
            "psi_out": state.psi_out,
            "k_tot": state.k_tot,
            "k": state.k_stage,
            "d": state.d_scratch,
            "v": state.potential,
        }
        for phase in phase_schedule(params.scheme):
            state.diagnostics["msd_floor_hits"] += self.run_phase(phase, fields, params, c)
        finish_step(state)

    def integrate_chunk(self, state: IntegratorState, params: SimParams, n_steps: int) -> IntegratorState:
        if state.grid != self.plan.grid:
            raise ValueError("state grid does not match the tile plan grid")
        n_steps = check_int(n_steps, "n_steps", 0)
        c = StepConstants.create(state.grid, params)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n_steps):
                self.step(state, params, c)
        return state


def integrate_chunk_parallel(state: IntegratorState, params: SimParams, n_steps: int,
                             plan: TilePlan, copy_halo: bool = True) -> IntegratorState:
    """Tiled equivalent of :func:`nlsefd.integrator.integrate_chunk`."""
    with TiledEngine(plan, copy_halo=copy_halo) as engine:
        return engine.integrate_chunk(state, params, n_steps)

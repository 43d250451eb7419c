"""NLSE right-hand side and explicit RK4 time stepping (serial path).

The equation is ``i psi_t + a lap(psi) - V psi + s |psi|^2 psi = 0``, i.e.
``F(psi) = i [a lap(psi) + (s|psi|^2 - V) psi]``, evaluated on split real and
imaginary arrays.

Two RK4 schedules are provided.  :func:`rk4_step_classic` is the textbook
ten-step form with a persistent ``K_tmp``.  :func:`rk4_step` is the
eleven-step low-storage form that writes the second stage to ``psi_out`` so a
tiled executor never overwrites values a neighbouring tile still has to read;
it is the schedule :mod:`nlsefd.engine` runs.  Both perform the same
floating-point operations on every point and give bit-identical results.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_enum, check_finite, check_int, check_positive
from .boundary import (
    BoundaryCoefficients,
    BoundaryKind,
    apply_laplacian,
    apply_time_derivative,
    boundary_points,
)
from .field import ComplexField, GridSpec, Precision, Workspace
from .stability import check_time_step, stability_bounds
from .stencil import SchemeKind, StencilCoefficients, cd_inner, interior, shoc2_inner


class DivergenceError(RuntimeError):
    """A non-finite value appeared in the solution."""

    def __init__(self, step: int, time: float):
        super().__init__(f"solution diverged (non-finite values) at step {step}, t={time:g}")
        self.step = step
        self.time = time


@dataclass(frozen=True, eq=False)
class SimParams:
    a: float = 1.0
    s: float = -1.0
    k_dt: float = 0.005
    potential: object = None
    scheme: SchemeKind = SchemeKind.CD
    bc: BoundaryKind = BoundaryKind.MSD
    precision: Precision = Precision.DOUBLE
    force_dt: bool = False
    msd_eps: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", check_positive(self.a, "a"))
        object.__setattr__(self, "s", check_finite(self.s, "s"))
        k = check_finite(self.k_dt, "k_dt")
        if k < 0:
            raise ValueError(f"k_dt must be >= 0, got {k}")
        object.__setattr__(self, "k_dt", k)
        object.__setattr__(self, "scheme", check_enum(self.scheme, SchemeKind, "scheme"))
        object.__setattr__(self, "bc", check_enum(self.bc, BoundaryKind, "bc"))
        object.__setattr__(self, "precision", check_enum(self.precision, Precision, "precision"))
        if self.msd_eps is not None:
            object.__setattr__(self, "msd_eps", check_positive(self.msd_eps, "msd_eps"))

    def potential_array(self, grid: GridSpec) -> np.ndarray:
        dtype = self.precision.dtype
        if self.potential is None:
            return np.zeros(grid.shape, dtype)
        v = np.asarray(self.potential)
        if np.iscomplexobj(v):
            raise ValueError("potential must be real-valued")
        if v.ndim == 0:
            return np.full(grid.shape, v, dtype)
        if v.shape != grid.shape:
            raise ValueError(f"potential shape {v.shape} does not match grid shape {grid.shape}")
        return np.ascontiguousarray(v, dtype)

    def replace(self, **changes) -> "SimParams":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return SimParams(**kw)


@dataclass(frozen=True)
class StepConstants:
    """Every scalar the kernels touch, cast once to the run dtype."""

    stencil: StencilCoefficients
    bound: BoundaryCoefficients
    a: np.floating
    neg_a: np.floating
    s: np.floating
    half_k: np.floating
    full_k: np.floating
    sixth_k: np.floating
    two: np.floating

    @classmethod
    def create(cls, grid: GridSpec, params: SimParams) -> "StepConstants":
        dtype = params.precision.dtype
        t = dtype.type
        k = params.k_dt
        return cls(
            stencil=StencilCoefficients.for_grid(grid, dtype),
            bound=BoundaryCoefficients.create(params.a, params.s, dtype, params.msd_eps),
            a=t(params.a),
            neg_a=t(-params.a),
            s=t(params.s),
            half_k=t(k / 2.0),
            full_k=t(k),
            sixth_k=t(k / 6.0),
            two=t(2.0),
        )


def f_interior(pr, pi, v, lap_re, lap_im, c: StepConstants, fr=None, fi=None, sm=None, tmp=None):
    """Split right-hand side at points whose Laplacian is known.

    ``fr = -a lap_im - s|psi|^2 pi + v pi`` and ``fi = a lap_re + s|psi|^2 pr - v pr``,
    evaluated left to right.  Optional buffers avoid temporaries; ``fr`` and
    ``fi`` may be views into the output field.
    """
    fr = np.empty_like(pr) if fr is None else fr
    fi = np.empty_like(pr) if fi is None else fi
    sm = np.empty_like(pr) if sm is None else sm
    tmp = np.empty_like(pr) if tmp is None else tmp
    np.multiply(pr, pr, out=sm)
    np.multiply(pi, pi, out=tmp)
    np.add(sm, tmp, out=sm)
    np.multiply(sm, c.s, out=sm)
    np.multiply(lap_im, c.neg_a, out=fr)
    np.multiply(sm, pi, out=tmp)
    np.subtract(fr, tmp, out=fr)
    np.multiply(v, pi, out=tmp)
    np.add(fr, tmp, out=fr)
    np.multiply(lap_re, c.a, out=fi)
    np.multiply(sm, pr, out=tmp)
    np.add(fi, tmp, out=fi)
    np.multiply(v, pr, out=tmp)
    np.subtract(fi, tmp, out=fi)
    return fr, fi


def stage_update(stage: int, c: StepConstants, psi, k_tot, k, out) -> None:
    """RK4 bookkeeping after the F evaluation of ``stage`` (1..4).

    Stages 1-3 set ``out`` to ``psi + w k`` and accumulate ``k_tot``; stage 4
    sets ``out = psi + (k/6)(k_tot + k)`` and leaves ``k_tot`` as scratch.
    Arrays may be full fields or views of one tile's owned block; ``k`` is
    only read, since neighbouring tiles may still be reading it.
    """
    if stage == 1:
        np.copyto(k_tot, k)
        np.multiply(k, c.half_k, out=out)
    elif stage == 4:
        np.add(k_tot, k, out=k_tot)
        np.multiply(k_tot, c.sixth_k, out=k_tot)
        np.add(psi, k_tot, out=out)
        return
    else:
        np.multiply(k, c.two, out=out)
        np.add(k_tot, out, out=k_tot)
        np.multiply(k, c.half_k if stage == 2 else c.full_k, out=out)
    np.add(psi, out, out=out)


@dataclass
class IntegratorState:
    psi: ComplexField
    k_tot: ComplexField
    psi_tmp: ComplexField
    psi_out: ComplexField
    k_stage: ComplexField
    d_scratch: ComplexField | None
    potential: np.ndarray
    k_dt: float
    step_count: int = 0
    time: float = 0.0
    diagnostics: dict = field(default_factory=lambda: {"msd_floor_hits": 0})
    work: Workspace | None = field(default=None, repr=False)

    @classmethod
    def create(cls, psi: ComplexField, params: SimParams, step_count: int = 0) -> "IntegratorState":
        """Copy ``psi`` into the run precision and allocate RK4 scratch.

        Raises :class:`~nlsefd.stability.StabilityError` if ``params.k_dt``
        exceeds the recommended step and ``force_dt`` is not set.
        """
        grid = psi.grid
        report = stability_bounds(grid.dim, params.a, grid.h, params.scheme)
        check_time_step(params.k_dt, report, params.force_dt)
        prec = params.precision
        start = ComplexField(grid, psi.re.astype(prec.dtype, copy=True), psi.im.astype(prec.dtype, copy=True))
        if not start.is_finite():
            raise ValueError("initial field contains non-finite values")
        zeros = lambda: ComplexField.zeros(grid, prec)  # noqa: E731
        return cls(
            psi=start,
            k_tot=zeros(),
            psi_tmp=zeros(),
            psi_out=zeros(),
            k_stage=zeros(),
            d_scratch=zeros() if params.scheme is SchemeKind.SHOC2 else None,
            potential=params.potential_array(grid),
            k_dt=params.k_dt,
            step_count=step_count,
            time=step_count * params.k_dt,
            work=interior_workspace(grid, prec.dtype),
        )

    @property
    def grid(self) -> GridSpec:
        return self.psi.grid

    def snapshot(self) -> ComplexField:
        return self.psi.copy()


def interior_workspace(grid: GridSpec, dtype) -> Workspace:
    return Workspace(tuple(n - 2 for n in grid.shape), dtype)


def f_rhs(psi: ComplexField, params: SimParams, output: ComplexField, *, potential=None,
          d_scratch: ComplexField | None = None, consts: StepConstants | None = None,
          work: Workspace | None = None) -> int:
    """Evaluate F(psi) into ``output`` at every grid point.

    Interior points use the scheme's Laplacian; boundary points are then
    filled from the boundary condition's time-derivative form.  For 2SHOC
    the intermediate CD Laplacian (with Laplacian-form boundary values) is
    left in ``d_scratch``.  Returns the number of MSD division-floor hits.
    """
    grid = psi.grid
    c = consts or StepConstants.create(grid, params)
    v = potential if potential is not None else params.potential_array(grid)
    w = work if work is not None else interior_workspace(grid, psi.dtype)
    pts = boundary_points(grid)
    inner = interior(grid.dim)
    hits = 0
    if params.scheme is SchemeKind.SHOC2:
        d = d_scratch if d_scratch is not None else ComplexField.zeros(grid, params.precision)
        cd_inner(psi.re, c.stencil, out=d.re[inner], tmp=w["t0"])
        cd_inner(psi.im, c.stencil, out=d.im[inner], tmp=w["t0"])
        hits += apply_laplacian(params.bc, c.bound, pts, psi.re, psi.im, v, d.re, d.im)
        lap_re = shoc2_inner(psi.re, d.re, c.stencil, out=w["lap_re"], tmp=w["t0"], tmp2=w["t1"])
        lap_im = shoc2_inner(psi.im, d.im, c.stencil, out=w["lap_im"], tmp=w["t0"], tmp2=w["t1"])
    else:
        lap_re = cd_inner(psi.re, c.stencil, out=w["lap_re"], tmp=w["t0"])
        lap_im = cd_inner(psi.im, c.stencil, out=w["lap_im"], tmp=w["t0"])
    f_interior(psi.re[inner], psi.im[inner], v[inner], lap_re, lap_im, c,
               fr=output.re[inner], fi=output.im[inner], sm=w["t0"], tmp=w["t1"])
    hits += apply_time_derivative(params.bc, c.bound, pts, psi.re, psi.im, v, output.re, output.im)
    return hits


def finish_step(state: IntegratorState) -> None:
    state.step_count += 1
    state.time = state.step_count * state.k_dt
    if not state.psi.is_finite():
        raise DivergenceError(state.step_count, state.time)


def rk4_step(state: IntegratorState, params: SimParams, consts: StepConstants | None = None) -> None:
    """Advance one step with the low-storage four-phase schedule."""
    c = consts or StepConstants.create(state.grid, params)
    k = state.k_stage
    stages = (
        (state.psi, state.psi_tmp),
        (state.psi_tmp, state.psi_out),
        (state.psi_out, state.psi_tmp),
        (state.psi_tmp, state.psi),
    )
    for stage, (src, dst) in enumerate(stages, start=1):
        state.diagnostics["msd_floor_hits"] += f_rhs(
            src, params, k, potential=state.potential, d_scratch=state.d_scratch, consts=c, work=state.work
        )
        stage_update(stage, c, state.psi.re, state.k_tot.re, k.re, dst.re)
        stage_update(stage, c, state.psi.im, state.k_tot.im, k.im, dst.im)
    finish_step(state)


def rk4_step_classic(state: IntegratorState, params: SimParams, consts: StepConstants | None = None) -> None:
    """Advance one step with the textbook ten-step schedule."""
    c = consts or StepConstants.create(state.grid, params)
    psi, k_tot, k_tmp, tmp = state.psi, state.k_tot, state.k_stage, state.psi_tmp
    kw = dict(potential=state.potential, d_scratch=state.d_scratch, consts=c, work=state.work)
    hits = f_rhs(psi, params, k_tot, **kw)
    for part in ("re", "im"):
        getattr(tmp, part)[...] = getattr(psi, part) + c.half_k * getattr(k_tot, part)
    for scale in (c.half_k, c.full_k):
        hits += f_rhs(tmp, params, k_tmp, **kw)
        for part in ("re", "im"):
            kt, kk = getattr(k_tot, part), getattr(k_tmp, part)
            kt[...] = kt + c.two * kk
            getattr(tmp, part)[...] = getattr(psi, part) + scale * kk
    hits += f_rhs(tmp, params, k_tmp, **kw)
    for part in ("re", "im"):
        p = getattr(psi, part)
        p[...] = p + c.sixth_k * (getattr(k_tot, part) + getattr(k_tmp, part))
    state.diagnostics["msd_floor_hits"] += hits
    finish_step(state)


SCHEDULES = {"low_storage": rk4_step, "classic": rk4_step_classic}


def integrate_chunk(state: IntegratorState, params: SimParams, n_steps: int,
                    schedule: str = "low_storage") -> IntegratorState:
    """Take ``n_steps`` RK4 steps in place and return ``state``."""
    n_steps = check_int(n_steps, "n_steps", 0)
    try:
        step = SCHEDULES[schedule]
    except KeyError:
        raise ValueError(f"schedule must be one of {sorted(SCHEDULES)}, got {schedule!r}") from None
    c = StepConstants.create(state.grid, params)
    # overflow is reported through DivergenceError, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            step(state, params, c)
    return state

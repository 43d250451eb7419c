"""Initial conditions and reference solutions.

* 1D co-moving dark soliton (exact solution for ``V = 0``, ``s < 0``).
* 2D dark vortex with the soliton's tanh profile standing in for the exact
  radial profile.
* 3D dark vortex ring: the same tanh vortex placed at ``r = d`` in the
  cylindrical ``r``-``z`` half-plane, times a back-flow phase ``exp(i c z / 2a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_finite, check_int, check_positive
from .field import ComplexField, GridSpec, Precision


@dataclass(frozen=True)
class SolitonParams:
    c: float = 0.5
    omega: float = -1.0
    x0: float = 0.0

    def validate(self, a: float, s: float) -> None:
        check_positive(a, "a")
        if s >= 0:
            raise ValueError(f"a dark soliton needs s < 0, got s={s}")
        if self.omega / s <= 0:
            raise ValueError(f"omega/s must be positive, got omega={self.omega}, s={s}")


@dataclass(frozen=True)
class VortexParams:
    m: int = 1
    omega: float = -1.0
    center: tuple | None = None

    def __post_init__(self):
        m = check_int(self.m, "m", minimum=-(2**31))
        if m == 0:
            raise ValueError("vortex charge m must be a nonzero integer")


@dataclass(frozen=True)
class VortexRingParams:
    d_radius: float
    c_backflow: float
    omega: float = -1.0
    center: tuple | None = None

    def __post_init__(self):
        check_positive(self.d_radius, "d_radius")
        check_finite(self.c_backflow, "c_backflow")


def dark_soliton(x, t, sp: SolitonParams, a: float, s: float):
    """Exact co-moving dark soliton value(s) at position(s) ``x`` and time ``t``."""
    sp.validate(a, s)
    x = np.asarray(x, dtype=np.float64)
    amp = math.sqrt(abs(sp.omega / s))
    width = math.sqrt(abs(sp.omega) / (2.0 * a))
    xi = x - sp.x0
    phase = (sp.c / (2.0 * a)) * xi + (sp.omega - sp.c * sp.c / (4.0 * a)) * t
    return amp * np.tanh(width * (xi - sp.c * t)) * np.exp(1j * phase)


def soliton_init(grid: GridSpec, sp: SolitonParams, a: float, s: float, t: float = 0.0,
                 precision=Precision.DOUBLE) -> ComplexField:
    if grid.dim != 1:
        raise ValueError("the dark soliton is a 1D problem")
    return ComplexField.from_complex(grid, dark_soliton(grid.axis_coords(0), t, sp, a, s), precision)


def soliton_error(psi: ComplexField, t: float, sp: SolitonParams, a: float, s: float) -> dict:
    """Max-norm and RMS of ``psi - exact(t)`` over the whole grid."""
    if psi.grid.dim != 1:
        raise ValueError("soliton_error needs a 1D field")
    diff = np.abs(psi.to_complex() - dark_soliton(psi.grid.axis_coords(0), t, sp, a, s))
    return {"max_abs": float(diff.max()), "rms": float(np.sqrt(np.mean(diff * diff)))}


def vortex_profile(r, omega: float, a: float, s: float):
    """tanh approximation to the dark-vortex radial profile."""
    return math.sqrt(abs(omega / s)) * np.tanh(math.sqrt(abs(omega) / (2.0 * a)) * np.asarray(r))


def default_center(grid: GridSpec) -> tuple:
    """Grid point nearest the domain midpoint, shifted by h/2 in every direction.

    The shift keeps a vortex core off the grid so its phase is never 0/0.
    """
    out = []
    for d in range(grid.dim):
        n = (grid.nx, grid.ny, grid.nz)[d]
        mid = (n - 1) // 2
        out.append(grid.origin[d] + (mid + 0.5) * grid.h)
    return tuple(out)


def vortex2d_init(grid: GridSpec, vp: VortexParams, a: float, s: float,
                  precision=Precision.DOUBLE) -> ComplexField:
    if grid.dim != 2:
        raise ValueError("vortex2d_init needs a 2D grid")
    xc, yc = vp.center if vp.center is not None else default_center(grid)
    x, y = grid.coords()
    lo = [grid.origin[d] for d in range(2)]
    hi = [grid.origin[d] + (n - 1) * grid.h for d, n in enumerate(grid.counts)]
    if not (lo[0] < xc < hi[0] and lo[1] < yc < hi[1]):
        raise ValueError(f"vortex center ({xc}, {yc}) is not strictly inside the domain")
    dx, dy = x - xc, y - yc
    psi = vortex_profile(np.hypot(dx, dy), vp.omega, a, s) * np.exp(1j * vp.m * np.arctan2(dy, dx))
    return ComplexField.from_complex(grid, psi, precision)


def vortex_phase(t: float, theta, vp: VortexParams):
    """Phase of the steady vortex, ``m theta + omega t``."""
    return vp.m * np.asarray(theta) + vp.omega * t


def ring_core_width(omega: float, a: float) -> float:
    """Radius at which the tanh core has recovered to tanh(2) of the background."""
    return 2.0 * math.sqrt(2.0 * a / abs(omega))


def vortex_ring_init(grid: GridSpec, vr: VortexRingParams, a: float, s: float,
                     precision=Precision.DOUBLE) -> ComplexField:
    """Dark vortex ring around the z axis through ``vr.center``.

    Raises ``ValueError`` if the ring and its core do not fit in the domain.
    """
    if grid.dim != 3:
        raise ValueError("vortex_ring_init needs a 3D grid")
    xc, yc, zc = vr.center if vr.center is not None else default_center(grid)
    w = ring_core_width(vr.omega, a)
    need = (vr.d_radius + w, vr.d_radius + w, w)
    for d, (c, req) in enumerate(zip((xc, yc, zc), need)):
        n = (grid.nx, grid.ny, grid.nz)[d]
        lo = grid.origin[d]
        hi = lo + (n - 1) * grid.h
        if min(c - lo, hi - c) < req:
            min_points = int(math.ceil(2 * req / grid.h)) + 2
            raise ValueError(
                f"vortex ring overlaps the {'xyz'[d]} boundary: need at least {req:.4g} from the "
                f"center to each face, i.e. a minimal extent of {2 * req:.4g} ({min_points} points at h={grid.h:g}); "
                f"grid has {hi - lo:.4g}"
            )
    x, y, z = grid.coords()
    r = np.hypot(x - xc, y - yc)
    dr, dz = r - vr.d_radius, z - zc
    g = vortex_profile(np.hypot(dr, dz), vr.omega, a, s) * np.exp(1j * np.arctan2(dz, dr))
    psi = g * np.exp(1j * (vr.c_backflow / (2.0 * a)) * dz)
    return ComplexField.from_complex(grid, psi, precision)

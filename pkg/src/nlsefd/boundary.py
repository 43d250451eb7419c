"""Boundary conditions in time-derivative and Laplacian form.

Every function here works on *gathered* boundary values: 1-D arrays holding
the field at a set of boundary points ``b`` and at their inward neighbors
``b-1``.  The serial integrator passes all boundary points, a tile passes the
ones it owns; the per-point arithmetic is identical either way.

The inward neighbor of a boundary point steps one cell inward along every
direction in which the point touches the boundary, so edge and corner points
use the diagonal interior neighbor.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from ._validation import check_enum
from .field import ComplexField, GridSpec, Precision


class BoundaryKind(Enum):
    DIRICHLET = "dirichlet"
    MSD = "msd"
    L0 = "l0"


DEFAULT_EPS = {Precision.DOUBLE: 1e-12, Precision.SINGLE: 1e-6}


@dataclass(frozen=True, eq=False)
class BoundaryPoints:
    """Flat indices of boundary points and of their inward neighbors."""

    flat: np.ndarray
    inward: np.ndarray

    def __len__(self):
        return len(self.flat)

    def subset(self, mask: np.ndarray) -> "BoundaryPoints":
        return BoundaryPoints(self.flat[mask], self.inward[mask])


@lru_cache(maxsize=64)
def boundary_points(grid: GridSpec) -> BoundaryPoints:
    shape = grid.shape
    idx = np.indices(shape)
    on_edge = np.zeros(shape, dtype=bool)
    for ax, n in enumerate(shape):
        on_edge |= (idx[ax] == 0) | (idx[ax] == n - 1)
    coords = [c[on_edge] for c in idx]
    inward = []
    for ax, n in enumerate(shape):
        c = coords[ax]
        inward.append(np.where(c == 0, 1, np.where(c == n - 1, n - 2, c)))
    flat = np.ravel_multi_index(coords, shape).astype(np.intp)
    inner = np.ravel_multi_index(inward, shape).astype(np.intp)
    flat.setflags(write=False)
    inner.setflags(write=False)
    return BoundaryPoints(flat, inner)


@dataclass(frozen=True)
class BoundaryCoefficients:
    a: np.floating
    neg_a: np.floating
    inv_a: np.floating
    neg_inv_a: np.floating
    s: np.floating
    eps2: np.floating

    @classmethod
    def create(cls, a: float, s: float, dtype, eps: float | None = None) -> "BoundaryCoefficients":
        t = np.dtype(dtype).type
        if eps is None:
            eps = DEFAULT_EPS[Precision.from_dtype(dtype)]
        return cls(t(a), t(-a), t(1.0 / a), t(-1.0 / a), t(s), t(eps * eps))


def nonlinear_term(re, im, v, s):
    """``N = s|psi|^2 - V`` evaluated pointwise."""
    return s * (re * re + im * im) - v


def time_derivative(kind: BoundaryKind, c: BoundaryCoefficients, pb_re, pb_im, vb,
                    pin_re=None, pin_im=None, fin_re=None, fin_im=None):
    """dpsi/dt at boundary points.

    ``pin``/``fin`` are psi and its (already computed) time derivative at the
    inward neighbors; only MSD reads them.  Returns ``(f_re, f_im, n_floor)``
    where ``n_floor`` counts MSD points whose inward |psi| fell below the
    division floor and were given a zero derivative.
    """
    if kind is BoundaryKind.DIRICHLET:
        return np.zeros_like(pb_re), np.zeros_like(pb_im), 0
    if kind is BoundaryKind.L0:
        n = nonlinear_term(pb_re, pb_im, vb, c.s)
        return -(n * pb_im), n * pb_re, 0
    m = pin_re * pin_re + pin_im * pin_im
    small = m < c.eps2
    safe = np.where(small, np.ones_like(m), m)
    rate = (fin_im * pin_re - fin_re * pin_im) / safe
    rate = np.where(small, np.zeros_like(rate), rate)
    return -(rate * pb_im), rate * pb_re, int(small.sum())


def laplacian(kind: BoundaryKind, c: BoundaryCoefficients, pb_re, pb_im, vb,
              pin_re=None, pin_im=None, vin=None, din_re=None, din_im=None):
    """Laplacian of psi at boundary points (the 2SHOC step-one boundary values).

    ``din`` is the CD Laplacian at the inward neighbors; only MSD reads the
    inward arguments.  Returns ``(d_re, d_im, n_floor)``.
    """
    if kind is BoundaryKind.L0:
        return np.zeros_like(pb_re), np.zeros_like(pb_im), 0
    nb = nonlinear_term(pb_re, pb_im, vb, c.s)
    if kind is BoundaryKind.DIRICHLET:
        g = c.neg_inv_a * nb
        return g * pb_re, g * pb_im, 0
    m = pin_re * pin_re + pin_im * pin_im
    small = m < c.eps2
    safe = np.where(small, np.ones_like(m), m)
    ratio = (din_re * pin_re + din_im * pin_im) / safe
    nin = nonlinear_term(pin_re, pin_im, vin, c.s)
    g = ratio + (nin - nb) * c.inv_a
    g = np.where(small, np.zeros_like(g), g)
    return g * pb_re, g * pb_im, int(small.sum())


def apply_time_derivative(kind, c, points: BoundaryPoints, psi_re, psi_im, v, f_re, f_im) -> int:
    """Fill ``f`` at ``points`` from global (full-grid) arrays; returns floor hits."""
    if len(points) == 0:
        return 0
    pr, pi, vv = psi_re.ravel(), psi_im.ravel(), v.ravel()
    fr, fi = f_re.reshape(-1), f_im.reshape(-1)
    b, n = points.flat, points.inward
    if kind is BoundaryKind.MSD:
        out_r, out_i, hits = time_derivative(kind, c, pr[b], pi[b], vv[b], pr[n], pi[n], fr[n], fi[n])
    else:
        out_r, out_i, hits = time_derivative(kind, c, pr[b], pi[b], vv[b])
    fr[b] = out_r
    fi[b] = out_i
    return hits


def apply_laplacian(kind, c, points: BoundaryPoints, psi_re, psi_im, v, d_re, d_im) -> int:
    """Fill the 2SHOC intermediate ``d`` at ``points``; returns floor hits."""
    if len(points) == 0:
        return 0
    pr, pi, vv = psi_re.ravel(), psi_im.ravel(), v.ravel()
    dr, di = d_re.reshape(-1), d_im.reshape(-1)
    b, n = points.flat, points.inward
    if kind is BoundaryKind.MSD:
        out_r, out_i, hits = laplacian(kind, c, pr[b], pi[b], vv[b], pr[n], pi[n], vv[n], dr[n], di[n])
    else:
        out_r, out_i, hits = laplacian(kind, c, pr[b], pi[b], vv[b])
    dr[b] = out_r
    di[b] = out_i
    return hits


def bc_time_derivative(kind, psi: ComplexField, f_interior: ComplexField, potential, a: float, s: float,
                       eps: float | None = None) -> ComplexField:
    """Return a copy of ``f_interior`` with every boundary point filled in."""
    kind = check_enum(kind, BoundaryKind, "kind")
    out = f_interior.copy()
    c = BoundaryCoefficients.create(a, s, psi.dtype, eps)
    v = np.broadcast_to(np.asarray(0.0 if potential is None else potential, psi.dtype), psi.grid.shape)
    apply_time_derivative(kind, c, boundary_points(psi.grid), psi.re, psi.im, v, out.re, out.im)
    return out


def bc_laplacian(kind, psi: ComplexField, d_interior: ComplexField, potential, a: float, s: float,
                 eps: float | None = None) -> ComplexField:
    """Return a copy of ``d_interior`` with Laplacian-form boundary values filled in."""
    kind = check_enum(kind, BoundaryKind, "kind")
    out = d_interior.copy()
    c = BoundaryCoefficients.create(a, s, psi.dtype, eps)
    v = np.broadcast_to(np.asarray(0.0 if potential is None else potential, psi.dtype), psi.grid.shape)
    apply_laplacian(kind, c, boundary_points(psi.grid), psi.re, psi.im, v, out.re, out.im)
    return out

"""Compact Laplacian stencils: second-order central difference and the
two-step fourth-order compact scheme.

The low-level ``*_inner`` functions take a padded array ``u`` (any block of a
field that carries a one-cell border) and return the Laplacian on
``u[1:-1, ...]``.  The whole grid is the padded block for its own interior;
a tile with its halo is the padded block for its owned interior points.
Both routes evaluate the same expression per point in the same order, which
is what makes tiled execution bit-identical to the serial path.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from .field import ComplexField, GridSpec


class SchemeKind(Enum):
    CD = "cd"
    SHOC2 = "2shoc"

    @property
    def order(self) -> int:
        return 2 if self is SchemeKind.CD else 4


@dataclass(frozen=True)
class StencilCoefficients:
    """Stencil constants pre-cast to the run dtype."""

    ndim: int
    inv_h2: np.floating
    neg_twelfth: np.floating
    inv_6h2: np.floating
    cd_center: np.floating
    d_center: np.floating
    psi_center: np.floating

    @classmethod
    def for_grid(cls, grid: GridSpec, dtype) -> "StencilCoefficients":
        t = np.dtype(dtype).type
        d = grid.dim
        h2 = grid.h * grid.h
        return cls(
            ndim=d,
            inv_h2=t(1.0 / h2),
            neg_twelfth=t(-1.0 / 12.0),
            inv_6h2=t(1.0 / (6.0 * h2)),
            cd_center=t(2 * d),
            d_center=t(16 - 2 * d),
            psi_center=t(4 * (d * (d - 1) // 2)),
        )


def interior(nd: int) -> tuple:
    """Slice tuple for the interior (border-stripped) part of an ``nd`` array."""
    return (slice(1, -1),) * nd



def _shifted(nd, offsets):
    """Slice tuple selecting ``u[1+o0:..., 1+o1:...]`` for per-axis offsets in {-1,0,1}."""
    out = []
    for o in offsets:
        if o == 0:
            out.append(slice(1, -1))
        elif o > 0:
            out.append(slice(2, None))
        else:
            out.append(slice(None, -2))
    return tuple(out)


def _buffer(buf, u, nd):
    return np.empty(u[interior(nd)].shape, u.dtype) if buf is None else buf


def _neighbor_sum(u, nd, out, tmp):
    """``out = sum over axes (x first) of u[+1] + u[-1]``."""
    first = True
    for ax in reversed(range(nd)):
        plus = [0] * nd
        minus = [0] * nd
        plus[ax], minus[ax] = 1, -1
        if first:
            np.add(u[_shifted(nd, plus)], u[_shifted(nd, minus)], out=out)
            first = False
        else:
            np.add(u[_shifted(nd, plus)], u[_shifted(nd, minus)], out=tmp)
            np.add(out, tmp, out=out)
    return out


def _diagonal_sum(u, nd, out):
    """Sum of the in-plane diagonal neighbors over every pair of axes.

    In 3D this is the 12 edge-diagonals; triple-diagonal corners are never read.
    """
    first = True
    for a, b in combinations(reversed(range(nd)), 2):
        for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            off = [0] * nd
            off[a], off[b] = sa, sb
            if first:
                np.copyto(out, u[_shifted(nd, off)])
                first = False
            else:
                np.add(out, u[_shifted(nd, off)], out=out)
    return out


def cd_inner(u: np.ndarray, coef: StencilCoefficients, out=None, tmp=None) -> np.ndarray:
    """``(sum of axis neighbors - 2d * center) / h^2``.

    ``out`` and ``tmp`` are optional preallocated interior-shaped buffers.
    """
    nd = coef.ndim
    out, tmp = _buffer(out, u, nd), _buffer(tmp, u, nd)
    _neighbor_sum(u, nd, out, tmp)
    np.multiply(u[interior(nd)], coef.cd_center, out=tmp)
    np.subtract(out, tmp, out=out)
    np.multiply(out, coef.inv_h2, out=out)
    return out


def shoc2_inner(u: np.ndarray, d: np.ndarray, coef: StencilCoefficients, out=None, tmp=None,
                tmp2=None) -> np.ndarray:
    """Second 2SHOC step from padded ``u`` and its padded CD Laplacian ``d``."""
    nd = coef.ndim
    c = interior(nd)
    out, tmp = _buffer(out, u, nd), _buffer(tmp, u, nd)
    _neighbor_sum(d, nd, out, tmp)
    np.multiply(d[c], coef.d_center, out=tmp)
    np.subtract(out, tmp, out=out)
    np.multiply(out, coef.neg_twelfth, out=out)
    if nd > 1:
        tmp2 = _buffer(tmp2, u, nd)
        _diagonal_sum(u, nd, tmp)
        np.multiply(u[c], coef.psi_center, out=tmp2)
        np.subtract(tmp, tmp2, out=tmp)
        np.multiply(tmp, coef.inv_6h2, out=tmp)
        np.add(out, tmp, out=out)
    return out


def cd_laplacian(psi: ComplexField) -> ComplexField:
    """CD Laplacian at interior points; boundary entries are left at zero."""
    coef = StencilCoefficients.for_grid(psi.grid, psi.dtype)
    out = ComplexField.zeros(psi.grid, psi.precision)
    c = interior(psi.grid.dim)
    out.re[c] = cd_inner(psi.re, coef)
    out.im[c] = cd_inner(psi.im, coef)
    return out


def shoc2_step2(psi: ComplexField, d: ComplexField) -> ComplexField:
    """Fourth-order Laplacian at interior points given the full-grid ``d``.

    ``d`` must already hold boundary values (see :mod:`nlsefd.boundary`).
    """
    coef = StencilCoefficients.for_grid(psi.grid, psi.dtype)
    out = ComplexField.zeros(psi.grid, psi.precision)
    c = interior(psi.grid.dim)
    out.re[c] = shoc2_inner(psi.re, d.re, coef)
    out.im[c] = shoc2_inner(psi.im, d.im, coef)
    return out


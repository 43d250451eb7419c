"""scikit-learn style wrapper around the integrator.

``X`` is a single complex field (1D, 2D ``(ny, nx)`` or 3D ``(nz, ny, nx)``),
not a sample matrix.  ``fit`` validates it and fixes the grid, stability
report and time step; ``transform`` evolves a field of the same shape.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_enum, check_int, check_positive
from .boundary import BoundaryKind
from .engine import integrate_chunk_parallel, plan_tiles
from .field import ComplexField, GridSpec, Precision
from .integrator import IntegratorState, SimParams, integrate_chunk
from .stability import check_time_step, stability_bounds
from .stencil import SchemeKind


def check_field(X, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite complex128 array with 1 to 3 axes of >= 3 points."""
    arr = np.asarray(X)
    if arr.dtype == object or not (np.issubdtype(arr.dtype, np.number)):
        raise TypeError(f"{name} must be a numeric array, got dtype {arr.dtype}")
    if arr.ndim not in (1, 2, 3):
        raise ValueError(f"{name} must have 1, 2 or 3 axes, got {arr.ndim}")
    if min(arr.shape) < 3:
        raise ValueError(f"{name} needs at least 3 points along every axis, got shape {arr.shape}")
    arr = arr.astype(np.complex128)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


class NLSEPropagator(TransformerMixin, BaseEstimator):
    """Evolve a field by ``t_end`` (or ``n_steps`` steps) of the NLSE.

    Parameters
    ----------
    h : grid spacing.
    a, s : dispersion and nonlinearity coefficients.
    scheme : ``"cd"`` or ``"2shoc"``.
    bc : ``"dirichlet"``, ``"msd"`` or ``"l0"``.
    dt : time step; defaults to the recommended stable step.
    t_end, n_steps : evolution length, at most one may be given
        (default ``n_steps=100``).  With ``t_end`` the step is shrunk so a
        whole number of steps lands exactly on it.
    potential : scalar or array ``V`` in the field's shape.
    workers, tile_shape : use the tiled engine when ``workers > 1`` or a
        tile shape is given.
    """

    def __init__(self, h=0.1, a=1.0, s=-1.0, scheme="cd", bc="msd", dt=None, t_end=None,
                 n_steps=None, precision="double", potential=None, workers=1, tile_shape=None,
                 force_dt=False, msd_eps=None):
        self.h = h
        self.a = a
        self.s = s
        self.scheme = scheme
        self.bc = bc
        self.dt = dt
        self.t_end = t_end
        self.n_steps = n_steps
        self.precision = precision
        self.potential = potential
        self.workers = workers
        self.tile_shape = tile_shape
        self.force_dt = force_dt
        self.msd_eps = msd_eps

    def fit(self, X, y=None):
        X = check_field(X)
        h = check_positive(self.h, "h")
        scheme = check_enum(self.scheme, SchemeKind, "scheme")
        counts = tuple(reversed(X.shape)) + (1,) * (3 - X.ndim)
        self.grid_ = GridSpec(X.ndim, *counts, h=h)
        self.stability_ = stability_bounds(X.ndim, self.a, h, scheme)
        dt = self.stability_.k_recommended if self.dt is None else check_positive(self.dt, "dt")
        if self.t_end is not None and self.n_steps is not None:
            raise ValueError("give at most one of t_end and n_steps")
        if self.t_end is not None:
            t_end = check_positive(self.t_end, "t_end")
            n = math.ceil(t_end / dt)
            dt = t_end / n
        else:
            n = check_int(100 if self.n_steps is None else self.n_steps, "n_steps", 0)
        check_time_step(dt, self.stability_, self.force_dt)
        self.dt_ = dt
        self.n_steps_ = n
        self.params_ = SimParams(
            a=self.a, s=self.s, k_dt=dt, potential=self.potential, scheme=scheme,
            bc=check_enum(self.bc, BoundaryKind, "bc"),
            precision=check_enum(self.precision, Precision, "precision"),
            force_dt=self.force_dt, msd_eps=self.msd_eps,
        )
        self.params_.potential_array(self.grid_)
        self.n_features_in_ = X.size
        return self

    def evolve(self, X, n_steps: int | None = None) -> IntegratorState:
        """Run the integrator and return the full final state."""
        check_is_fitted(self, "params_")
        X = check_field(X)
        if X.shape != self.grid_.shape:
            raise ValueError(f"X has shape {X.shape}, fitted for {self.grid_.shape}")
        n = self.n_steps_ if n_steps is None else check_int(n_steps, "n_steps", 0)
        state = IntegratorState.create(ComplexField.from_complex(self.grid_, X), self.params_)
        workers = check_int(self.workers, "workers", 1)
        if workers > 1 or self.tile_shape is not None:
            plan = plan_tiles(self.grid_, self.tile_shape, workers)
            integrate_chunk_parallel(state, self.params_, n, plan)
        else:
            integrate_chunk(state, self.params_, n)
        return state

    def transform(self, X):
        state = self.evolve(X)
        out_dtype = np.complex64 if self.params_.precision is Precision.SINGLE else np.complex128
        return (state.psi.re + 1j * state.psi.im).astype(out_dtype)

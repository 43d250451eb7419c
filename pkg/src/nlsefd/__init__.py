"""Explicit finite-difference integrator for the nonlinear Schroedinger equation."""
from .boundary import BoundaryKind, bc_laplacian, bc_time_derivative
from .config import ConfigError, RunConfig, load_config
from .engine import TiledEngine, integrate_chunk_parallel, plan_tiles
from .estimator import NLSEPropagator
from .field import ComplexField, GridSpec, Precision
from .frames import Frame, read_frame, write_frame
from .integrator import (
    DivergenceError,
    IntegratorState,
    SimParams,
    f_rhs,
    integrate_chunk,
    rk4_step,
    rk4_step_classic,
)
from .problems import (
    SolitonParams,
    VortexParams,
    VortexRingParams,
    dark_soliton,
    default_center,
    soliton_error,
    soliton_init,
    vortex2d_init,
    vortex_ring_init,
)
from .stability import StabilityError, StabilityReport, stability_bounds
from .stencil import SchemeKind, cd_laplacian, shoc2_step2

__version__ = "0.1.0"

__all__ = [
    "BoundaryKind", "ComplexField", "ConfigError", "DivergenceError", "Frame", "GridSpec",
    "IntegratorState", "NLSEPropagator", "Precision", "RunConfig", "SchemeKind", "SimParams",
    "SolitonParams", "StabilityError", "StabilityReport", "TiledEngine", "VortexParams",
    "VortexRingParams", "bc_laplacian", "bc_time_derivative", "cd_laplacian", "dark_soliton", "default_center", "soliton_error",
    "f_rhs", "integrate_chunk", "integrate_chunk_parallel", "load_config", "plan_tiles",
    "read_frame", "rk4_step", "rk4_step_classic", "shoc2_step2", "soliton_init", "stability_bounds",
    "vortex2d_init", "vortex_ring_init", "write_frame",
]

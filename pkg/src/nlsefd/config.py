"""Run configuration: flat ``key = value`` files with ``#`` comments.

Every value is validated before any field is allocated; errors raise
:class:`ConfigError` naming the offending key.

Step accounting.  ``dt`` defaults to the recommended stable step.  With
``t_end`` set, ``n_frames`` (default 10) equal chunks cover ``[0, t_end]`` and
``dt`` is shrunk so ``chunk_size * n_frames * dt == t_end``.  Without
``t_end``, ``chunk_size`` and ``n_frames`` are taken as given.  Either way
``chunk_size * n_frames`` is the total number of steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ._validation import check_enum, check_finite, check_int, check_positive
from .boundary import BoundaryKind
from .field import ComplexField, GridSpec, Precision
from .integrator import SimParams
from .problems import (
    SolitonParams,
    VortexParams,
    VortexRingParams,
    soliton_init,
    vortex2d_init,
    vortex_ring_init,
)
from .stability import StabilityReport, stability_bounds
from .stencil import SchemeKind

MAX_STEPS = 10**12
PROBLEMS = {"soliton": 1, "vortex2d": 2, "vortex_ring": 3}
PROBLEM_DEFAULTS = {
    "soliton": {"n": (1001,), "h": 0.1},
    "vortex2d": {"n": (70, 70), "h": 0.25},
    "vortex_ring": {"n": (33, 33, 21), "h": 1.0},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_shape(text: str, dim: int | None = None) -> tuple:
    """``"16x16"`` or ``"16"`` to a tuple of ints (x first)."""
    parts = str(text).lower().replace("*", "x").split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"expected integers separated by 'x', got {text!r}") from None
    if dim is not None:
        if len(vals) == 1:
            vals = vals * dim
        if len(vals) != dim:
            raise ValueError(f"expected {dim} entries, got {len(vals)} in {text!r}")
    if any(v < 1 for v in vals):
        raise ValueError(f"entries must be positive, got {text!r}")
    return vals


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt(conv):
    def inner(text):
        if text is None or (isinstance(text, str) and text.strip().lower() in ("", "none")):
            return None
        return conv(text)
    return inner


def _float(name):
    return lambda v: check_finite(v, name)


def _positive(name):
    return lambda v: check_positive(v, name)


def _int(name, minimum=0):
    def inner(v):
        if isinstance(v, str):
            try:
                v = int(v.strip())
            except ValueError:
                raise ValueError(f"expected an integer, got {v!r}") from None
        return check_int(v, name, minimum)
    return inner


def _center(text):
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(","))


_CONVERTERS = {
    "problem": lambda v: _choice(v, PROBLEMS),
    "n": lambda v: v if isinstance(v, tuple) else parse_shape(v),
    "h": _opt(_positive("h")),
    "a": _positive("a"),
    "s": _float("s"),
    "dt": _opt(_positive("dt")),
    "t_end": _opt(lambda v: _nonneg(v, "t_end")),
    "chunk_size": _opt(_int("chunk_size")),
    "n_frames": _opt(_int("n_frames")),
    "scheme": lambda v: check_enum(v, SchemeKind, "scheme"),
    "bc": lambda v: check_enum(v, BoundaryKind, "bc"),
    "precision": lambda v: check_enum(v, Precision, "precision"),
    "tile": _opt(lambda v: v if isinstance(v, tuple) else parse_shape(v)),
    "workers": _int("workers", 1),
    "force_dt": _bool,
    "out": lambda v: Path(v),
    "csv": _bool,
    "v0": _float("v0"),
    "c": _float("c"),
    "omega": _float("omega"),
    "x0": _float("x0"),
    "m": _int("m", -(2**31)),
    "d_radius": _positive("d_radius"),
    "c_backflow": _float("c_backflow"),
    "center": _opt(_center),
    "msd_eps": _opt(_positive("msd_eps")),
}


def _choice(v, options):
    key = str(v).strip().lower()
    if key not in options:
        raise ValueError(f"must be one of {sorted(options)}, got {v!r}")
    return key


def _nonneg(v, name):
    v = check_finite(v, name)
    if v < 0:
        raise ValueError(f"{name} must be >= 0, got {v}")
    return v


@dataclass(frozen=True)
class RunConfig:
    problem: str = "soliton"
    n: tuple | None = None
    h: float | None = None
    a: float = 1.0
    s: float = -1.0
    dt: float | None = None
    t_end: float | None = None
    chunk_size: int | None = None
    n_frames: int | None = None
    scheme: SchemeKind = SchemeKind.CD
    bc: BoundaryKind = BoundaryKind.MSD
    precision: Precision = Precision.DOUBLE
    tile: tuple | None = None
    workers: int = 1
    force_dt: bool = False
    out: Path = Path("nlse_out")
    csv: bool = False
    v0: float = 0.0
    c: float = 0.5
    omega: float = -1.0
    x0: float = 0.0
    m: int = 1
    d_radius: float = 5.0
    c_backflow: float = 0.0
    center: tuple | None = None
    msd_eps: float | None = None

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        kw = {}
        for key, raw in values.items():
            if key not in _CONVERTERS:
                raise ConfigError(key, f"unknown key (known: {', '.join(sorted(_CONVERTERS))})")
            try:
                kw[key] = _CONVERTERS[key](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, str(exc)) from None
        return cls(**kw).validated()

    def with_overrides(self, **values) -> "RunConfig":
        merged = {f.name: getattr(self, f.name) for f in fields(self)}
        merged.update({k: v for k, v in values.items() if v is not None})
        return RunConfig.from_mapping(merged)

    @property
    def dim(self) -> int:
        return PROBLEMS[self.problem]

    def validated(self) -> "RunConfig":
        """Fill problem defaults and check cross-field constraints."""
        dim = self.dim
        defaults = PROBLEM_DEFAULTS[self.problem]
        n = self.n if self.n is not None else defaults["n"]
        if len(n) == 1 and dim > 1:
            n = n * dim
        if len(n) != dim:
            raise ConfigError("n", f"{self.problem} needs {dim} point counts, got {len(n)}")
        if any(v < 3 for v in n):
            raise ConfigError("n", f"every point count must be >= 3, got {n}")
        tile = self.tile
        if tile is not None:
            if len(tile) == 1 and dim > 1:
                tile = tile * dim
            if len(tile) != dim:
                raise ConfigError("tile", f"needs {dim} entries for {self.problem}, got {len(tile)}")
            if any(t < 2 for t in tile):
                raise ConfigError("tile", f"entries must be >= 2, got {tile}")
        if self.center is not None and len(self.center) != dim:
            raise ConfigError("center", f"needs {dim} coordinates, got {len(self.center)}")
        cfg = replace(self, n=tuple(n), tile=tile, h=self.h if self.h is not None else defaults["h"])
        if cfg.problem == "soliton":
            try:
                SolitonParams(cfg.c, cfg.omega, cfg.x0).validate(cfg.a, cfg.s)
            except ValueError as exc:
                raise ConfigError("s" if cfg.s >= 0 else "omega", str(exc)) from None
        if cfg.problem == "vortex2d" and cfg.m == 0:
            raise ConfigError("m", "vortex charge must be nonzero")
        cfg._steps()
        return cfg

    def stability(self) -> StabilityReport:
        return stability_bounds(self.dim, self.a, self.h, self.scheme)

    def _steps(self) -> tuple:
        k_rec = self.stability().k_recommended
        dt = self.dt if self.dt is not None else k_rec
        if self.t_end is not None:
            if self.chunk_size is not None and self.n_frames is not None:
                raise ConfigError("chunk_size", "over-specified: give at most two of t_end, chunk_size, n_frames")
            if self.t_end == 0:
                return dt, 0, self.n_frames or 0
            if not self.t_end / dt <= MAX_STEPS:
                raise ConfigError("t_end", f"needs more than {MAX_STEPS:.0e} steps at dt={dt:g}")
            if self.chunk_size is not None:
                if self.chunk_size == 0:
                    raise ConfigError("chunk_size", "must be positive when t_end > 0")
                n_frames = max(1, math.ceil(self.t_end / (dt * self.chunk_size)))
                chunk = self.chunk_size
            else:
                n_frames = 10 if self.n_frames is None else self.n_frames
                if n_frames == 0:
                    raise ConfigError("n_frames", "must be positive when t_end > 0")
                chunk = max(1, math.ceil(self.t_end / (dt * n_frames)))
            return self.t_end / (chunk * n_frames), chunk, n_frames
        chunk = 100 if self.chunk_size is None else self.chunk_size
        n_frames = 10 if self.n_frames is None else self.n_frames
        if chunk * n_frames > MAX_STEPS:
            raise ConfigError("chunk_size", f"chunk_size * n_frames exceeds {MAX_STEPS:.0e} steps")
        if chunk * n_frames == 0:
            # zero total steps still writes the initial frame
            return dt, 0, 0
        return dt, chunk, n_frames

    def schedule(self) -> tuple:
        """``(k_dt, chunk_size, n_frames)``; ``chunk_size * n_frames`` is the step total."""
        return self._steps()

    def grid(self) -> GridSpec:
        return GridSpec.centered(self.dim, self.n, self.h)

    def sim_params(self) -> SimParams:
        k_dt, _, _ = self.schedule()
        return SimParams(
            a=self.a,
            s=self.s,
            k_dt=k_dt,
            potential=self.v0 if self.v0 else None,
            scheme=self.scheme,
            bc=self.bc,
            precision=self.precision,
            force_dt=self.force_dt,
            msd_eps=self.msd_eps,
        )

    def soliton_params(self) -> SolitonParams:
        return SolitonParams(self.c, self.omega, self.x0)

    def initial_field(self) -> ComplexField:
        grid = self.grid()
        if self.problem == "soliton":
            return soliton_init(grid, self.soliton_params(), self.a, self.s, precision=self.precision)
        if self.problem == "vortex2d":
            return vortex2d_init(grid, VortexParams(self.m, self.omega, self.center), self.a, self.s, self.precision)
        vr = VortexRingParams(self.d_radius, self.c_backflow, self.omega, self.center)
        try:
            return vortex_ring_init(grid, vr, self.a, self.s, self.precision)
        except ValueError as exc:
            raise ConfigError("n", str(exc)) from None

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if hasattr(v, "value"):
                v = v.value
            elif isinstance(v, Path):
                v = str(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def parse_config_text(text: str) -> dict:
    """Raw ``key -> value`` strings; later keys override earlier ones."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "missing key before '='")
        out[key] = value
    return out


def load_config(path, **overrides) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    raw = parse_config_text(text)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_mapping(raw)


"""Structured grids and split real/imaginary complex fields.

Storage layout is row-major with x fastest.  A 3D field is held as a numpy
array of shape ``(nz, ny, nx)``, a 2D field as ``(ny, nx)`` and a 1D field as
``(nx,)``; the flat offset of point ``(i, j, k)`` is ``(k*ny + j)*nx + i``.
Frames on disk use the same order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._validation import check_enum, check_finite, check_int, check_positive


class Precision(Enum):
    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is Precision.SINGLE else np.float64)

    @classmethod
    def from_dtype(cls, dtype) -> "Precision":
        dtype = np.dtype(dtype)
        if dtype == np.float32:
            return cls.SINGLE
        if dtype == np.float64:
            return cls.DOUBLE
        raise ValueError(f"unsupported field dtype {dtype}")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with identical spacing ``h`` in every active direction.

    Unused directions have a point count of one.  ``origin`` holds the
    physical coordinate of point ``(0, 0, 0)``.
    """

    dim: int
    nx: int
    ny: int = 1
    nz: int = 1
    h: float = 1.0
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        dim = check_int(self.dim, "dim", 1)
        if dim > 3:
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        counts = (self.nx, self.ny, self.nz)
        for axis, (name, n) in enumerate(zip("xyz", counts)):
            n = check_int(n, f"n{name}", 1)
            if axis < dim and n < 3:
                raise ValueError(f"n{name} must be >= 3 in an active direction, got {n}")
            if axis >= dim and n != 1:
                raise ValueError(f"n{name} must be 1 for a {dim}D grid, got {n}")
        check_positive(self.h, "h")
        origin = tuple(self.origin) + (0.0,) * (3 - len(tuple(self.origin)))
        if len(origin) != 3:
            raise ValueError("origin must have at most 3 entries")
        object.__setattr__(self, "origin", tuple(check_finite(o, "origin") for o in origin))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def centered(cls, dim: int, n, h: float) -> "GridSpec":
        """Grid with ``n`` points per direction placed symmetrically about 0."""
        counts = tuple(n) if np.ndim(n) else (int(n),) * dim
        counts = counts + (1,) * (3 - len(counts))
        origin = tuple(-(c - 1) * h / 2.0 if c > 1 else 0.0 for c in counts)
        return cls(dim, *counts, h=h, origin=origin)

    @property
    def counts(self) -> tuple:
        """Active point counts in x, y, z order."""
        return (self.nx, self.ny, self.nz)[: self.dim]

    @property
    def shape(self) -> tuple:
        """Numpy array shape (slowest axis first)."""
        return tuple(reversed(self.counts))

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    def axis_coords(self, direction: int) -> np.ndarray:
        n = (self.nx, self.ny, self.nz)[direction]
        return self.origin[direction] + self.h * np.arange(n, dtype=np.float64)

    def coords(self) -> list:
        """Coordinate arrays ``[x, y, z][:dim]`` broadcast to :attr:`shape`."""
        axes = [self.axis_coords(d) for d in range(self.dim)]
        mesh = np.meshgrid(*reversed(axes), indexing="ij")
        return list(reversed(mesh))


def linear_index(grid, i: int, j: int = 0, k: int = 0) -> int:
    """Flat offset of point ``(i, j, k)``; ``grid`` is a GridSpec or an ``(nx, ny, nz)`` tuple."""
    nx, ny, nz = (grid.nx, grid.ny, grid.nz) if isinstance(grid, GridSpec) else tuple(grid) + (1,) * (3 - len(grid))
    if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
        raise IndexError(f"({i}, {j}, {k}) outside grid {nx}x{ny}x{nz}")
    return (k * ny + j) * nx + i


@dataclass
class ComplexField:
    grid: GridSpec
    re: np.ndarray
    im: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.re.shape != self.grid.shape or self.im.shape != self.grid.shape:
            raise ValueError(
                f"field arrays {self.re.shape}/{self.im.shape} do not match grid shape {self.grid.shape}"
            )
        if self.re.dtype != self.im.dtype:
            raise ValueError("real and imaginary parts must share a dtype")
        Precision.from_dtype(self.re.dtype)

    @classmethod
    def zeros(cls, grid: GridSpec, precision=Precision.DOUBLE) -> "ComplexField":
        dtype = check_enum(precision, Precision, "precision").dtype
        return cls(grid, np.zeros(grid.shape, dtype), np.zeros(grid.shape, dtype))

    @classmethod
    def from_complex(cls, grid: GridSpec, values, precision=Precision.DOUBLE) -> "ComplexField":
        dtype = check_enum(precision, Precision, "precision").dtype
        values = np.asarray(values)
        if values.shape != grid.shape:
            values = np.broadcast_to(values, grid.shape)
        return cls(
            grid,
            np.ascontiguousarray(values.real, dtype=dtype),
            np.ascontiguousarray(np.imag(values), dtype=dtype),
        )

    @property
    def dtype(self) -> np.dtype:
        return self.re.dtype

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self.re.dtype)

    def to_complex(self) -> np.ndarray:
        return self.re.astype(np.float64) + 1j * self.im.astype(np.float64)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.re.copy(), self.im.copy())

    def assign(self, other: "ComplexField") -> None:
        np.copyto(self.re, other.re)
        np.copyto(self.im, other.im)

    def modulus_squared(self) -> np.ndarray:
        return self.re * self.re + self.im * self.im

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.re).all() and np.isfinite(self.im).all())

    def l2_norm(self) -> float:
        """Discrete L2 norm ``sqrt(h^d * sum |psi|^2)`` accumulated in double."""
        m = self.re.astype(np.float64) ** 2 + self.im.astype(np.float64) ** 2
        return float(np.sqrt(m.sum() * self.grid.h**self.grid.dim))


def make_uniform(grid: GridSpec, value_re: float, value_im: float, precision=Precision.DOUBLE) -> ComplexField:
    dtype = check_enum(precision, Precision, "precision").dtype
    return ComplexField(grid, np.full(grid.shape, value_re, dtype), np.full(grid.shape, value_im, dtype))


def axpy(out: ComplexField, x: ComplexField, alpha, y: ComplexField) -> ComplexField:
    """``out = x + alpha*y`` elementwise; ``alpha`` is cast to the field dtype."""
    a = out.dtype.type(alpha)
    np.add(x.re, a * y.re, out=out.re)
    np.add(x.im, a * y.im, out=out.im)
    return out


class Workspace:
    """Named scratch arrays of one shape and dtype, allocated on first use and reused."""

    def __init__(self, shape, dtype):
        self.shape = tuple(shape)
        self.dtype = np.dtype(dtype)
        self._bufs: dict = {}

    def __getitem__(self, name: str) -> np.ndarray:
        buf = self._bufs.get(name)
        if buf is None:
            buf = self._bufs[name] = np.empty(self.shape, self.dtype)
        return buf

    def __len__(self):
        return len(self._bufs)

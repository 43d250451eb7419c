"""Binary solution frames.

Layout (all little-endian):

=========  =======  ===========================================
offset     type     content
=========  =======  ===========================================
0          8s       magic ``b"NLSEFRM\\0"``
8          u32      format version (1)
12         u32      bytes per float (4 = single, 8 = double)
16         u32 x4   dim, nx, ny, nz
32         f64 x5   h, k_dt, a, s, time
72         u64      step_count
80         float    real part, nx*ny*nz values, x fastest
...        float    imaginary part, same order
=========  =======  ===========================================
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import ComplexField, GridSpec, Precision

MAGIC = b"NLSEFRM\x00"
VERSION = 1
HEADER = struct.Struct("<8sIIIIIIdddddQ")


class FrameFormatError(ValueError):
    pass


@dataclass(eq=False)
class Frame:
    dim: int
    nx: int
    ny: int
    nz: int
    h: float
    k_dt: float
    a: float
    s: float
    time: float
    step_count: int
    re: np.ndarray
    im: np.ndarray

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self.re.dtype)

    @property
    def shape(self) -> tuple:
        return tuple(reversed((self.nx, self.ny, self.nz)[: self.dim]))

    @classmethod
    def from_field(cls, psi: ComplexField, *, k_dt: float, a: float, s: float, time: float,
                   step_count: int) -> "Frame":
        g = psi.grid
        return cls(g.dim, g.nx, g.ny, g.nz, g.h, k_dt, a, s, time, step_count, psi.re.copy(), psi.im.copy())

    def to_field(self, origin=(0.0, 0.0, 0.0)) -> ComplexField:
        grid = GridSpec(self.dim, self.nx, self.ny, self.nz, h=self.h, origin=origin)
        return ComplexField(grid, self.re.reshape(grid.shape).copy(), self.im.reshape(grid.shape).copy())

    def to_bytes(self) -> bytes:
        width = self.re.dtype.itemsize
        head = HEADER.pack(MAGIC, VERSION, width, self.dim, self.nx, self.ny, self.nz,
                           self.h, self.k_dt, self.a, self.s, self.time, self.step_count)
        le = np.dtype(f"<f{width}")
        return head + self.re.astype(le).tobytes() + self.im.astype(le).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Frame":
        if len(data) < HEADER.size:
            raise FrameFormatError(f"frame is {len(data)} bytes, shorter than the {HEADER.size}-byte header")
        magic, version, width, dim, nx, ny, nz, h, k_dt, a, s, time, steps = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FrameFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FrameFormatError(f"unsupported frame version {version}")
        if width not in (4, 8):
            raise FrameFormatError(f"unsupported float width {width}")
        if dim not in (1, 2, 3):
            raise FrameFormatError(f"bad dimensionality {dim}")
        n = nx * ny * nz
        expected = HEADER.size + 2 * n * width
        if len(data) != expected:
            raise FrameFormatError(f"payload size mismatch: expected {expected} bytes, got {len(data)}")
        shape = tuple(reversed((nx, ny, nz)[:dim]))
        le = np.dtype(f"<f{width}")
        native = np.dtype(f"f{width}")
        re = np.frombuffer(data, le, n, HEADER.size).astype(native).reshape(shape)
        im = np.frombuffer(data, le, n, HEADER.size + n * width).astype(native).reshape(shape)
        return cls(dim, nx, ny, nz, h, k_dt, a, s, time, steps, re, im)


def write_frame(path, frame: Frame) -> Path:
    path = Path(path)
    path.write_bytes(frame.to_bytes())
    return path


def read_frame(path) -> Frame:
    return Frame.from_bytes(Path(path).read_bytes())


def write_frame_csv(path, frame: Frame, x: np.ndarray) -> Path:
    """1D only: one row per point with ``x, re, im, |psi|^2``."""
    if frame.dim != 1:
        raise ValueError("CSV export is only available for 1D frames")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im", "abs2"])
        for xi, r, i in zip(x, frame.re.astype(np.float64), frame.im.astype(np.float64)):
            w.writerow([repr(float(xi)), repr(float(r)), repr(float(i)), repr(float(r * r + i * i))])
    return path

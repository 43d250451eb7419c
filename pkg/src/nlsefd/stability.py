"""Linear stability bounds for RK4 with the CD and 2SHOC Laplacians."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ._validation import check_enum, check_int, check_positive
from .stencil import SchemeKind

SAFETY_FACTOR = 0.8


class StabilityError(ValueError):
    """Raised when a time step exceeds the recommended bound without an override."""


@dataclass(frozen=True)
class StabilityReport:
    k_max_linear: float
    k_recommended: float
    scheme: SchemeKind
    d: int
    a: float
    h: float

    def as_dict(self) -> dict:
        out = asdict(self)
        out["scheme"] = self.scheme.value
        return out


def stability_bounds(d: int, a: float, h: float, scheme=SchemeKind.CD) -> StabilityReport:
    """Largest linearly stable step for ``s = 0``, ``V = 0``.

    CD: ``k < h^2 / (d sqrt(2) a)``; 2SHOC is 3/4 of that.  The recommended
    step is 0.8 of the bound.
    """
    d = check_int(d, "d", 1)
    if d > 3:
        raise ValueError(f"d must be 1, 2 or 3, got {d}")
    a = check_positive(a, "a")
    h = check_positive(h, "h")
    scheme = check_enum(scheme, SchemeKind, "scheme")
    k_max = h * h / (d * math.sqrt(2.0) * a)
    if scheme is SchemeKind.SHOC2:
        k_max *= 0.75
    return StabilityReport(k_max, SAFETY_FACTOR * k_max, scheme, d, a, h)


def check_time_step(k_dt: float, report: StabilityReport, force: bool = False) -> None:
    if k_dt > report.k_recommended and not force:
        raise StabilityError(
            f"time step {k_dt:g} exceeds the recommended bound k_recommended={report.k_recommended:.7g} "
            f"(linear limit {report.k_max_linear:.7g}); pass force_dt to override"
        )

"""Small argument checkers shared by the public entry points.

All of them raise :class:`ValueError` (or :class:`TypeError`) naming the
offending parameter, so configuration errors surface before any array is
allocated.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import Iterable, Type, TypeVar

import numpy as np

E = TypeVar("E", bound=Enum)


def check_positive(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise TypeError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v) or v <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return v


def check_finite(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise TypeError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


def check_int(value, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_enum(value, enum_cls: Type[E], name: str) -> E:
    """Accept an enum member or its (case-insensitive) value/name string."""
    if isinstance(value, enum_cls):
        return value
    if isinstance(value, str):
        key = value.strip().lower()
        for member in enum_cls:
            if key in (str(member.value).lower(), member.name.lower()):
                return member
    choices = ", ".join(str(m.value) for m in enum_cls)
    raise ValueError(f"{name} must be one of {{{choices}}}, got {value!r}")


def check_shape_tuple(values: Iterable, name: str, length: int, minimum: int = 1) -> tuple:
    vals = tuple(values)
    if len(vals) != length:
        raise ValueError(f"{name} must have {length} entries, got {len(vals)}")
    return tuple(check_int(v, f"{name}[{i}]", minimum) for i, v in enumerate(vals))

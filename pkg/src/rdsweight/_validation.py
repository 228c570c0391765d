"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np


class ValidationError(ValueError):
    """Raised when user-supplied data violates a structural requirement."""


def check_random_state(seed) -> np.random.Generator:
    """Turn ``seed`` into a ``numpy.random.Generator``.

    Accepts None, an int, a ``SeedSequence`` or an existing ``Generator``
    (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a Generator from {type(seed).__name__}")


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_probability(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or np.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_degrees(degrees, name: str = "degrees") -> np.ndarray:
    """Return ``degrees`` as a 1-d int array, rejecting anything below 1."""
    arr = np.asarray(degrees)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValidationError(f"{name} must be integers")
    arr = arr.astype(np.int64)
    bad = np.flatnonzero(arr < 1)
    if bad.size:
        raise ValidationError(
            f"{name} must be >= 1; position {int(bad[0])} has degree {int(arr[bad[0]])}"
        )
    return arr


def check_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    ok = np.isnan(arr) | (arr == 0) | (arr == 1)
    if not np.all(ok):
        pos = int(np.flatnonzero(~ok)[0])
        raise ValidationError(f"{name} must be 0/1; position {pos} has {arr[pos]!r}")
    return arr

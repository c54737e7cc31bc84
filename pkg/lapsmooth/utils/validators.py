"""
Input validation utilities for lapsmooth.
"""

from pathlib import Path
from typing import Optional

import numpy as np

from ..exceptions import InputError


def validate_file_path(file_path: str) -> bool:
    """
    Validate that a file path exists and is readable.

    Args:
        file_path: Path to file

    Returns:
        True if valid and exists, False otherwise
    """
    if not file_path or not isinstance(file_path, str):
        return False

    path = Path(file_path)
    return path.exists() and path.is_file()


def validate_points(points, min_points: int = 2) -> np.ndarray:
    """
    Coerce a point array to an (n, d) float matrix and check it.

    Args:
        points: Array-like of shape (n, d) or (n,) for d = 1
        min_points: Minimum number of rows

    Returns:
        The points as a C-contiguous float64 matrix

    Raises:
        InputError: if the shape is wrong, n is too small or a coordinate is not finite
    """
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2:
        raise InputError(f"Points must be an (n, d) matrix, got shape {array.shape}")
    if array.shape[0] < min_points:
        raise InputError(f"Need at least {min_points} points, got {array.shape[0]}")
    if array.shape[1] < 1:
        raise InputError("Points must have at least one coordinate")
    if not np.all(np.isfinite(array)):
        raise InputError("Point coordinates must all be finite")
    return np.ascontiguousarray(array)


def validate_vector(values, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """
    Coerce values to a finite 1-d float vector, optionally of a given length.

    Raises:
        InputError: on dimension mismatch or non-finite entries
    """
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim == 2 and 1 in vector.shape:
        vector = vector.ravel()
    if vector.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {vector.shape}")
    if length is not None and vector.shape[0] != length:
        raise InputError(f"{name} has length {vector.shape[0]}, expected {length}")
    if not np.all(np.isfinite(vector)):
        raise InputError(f"{name} must contain only finite values")
    return vector


def validate_positive(value: float, name: str, allow_zero: bool = False) -> float:
    """
    Check that a scalar is finite and positive (or nonnegative).

    Raises:
        InputError: if the check fails
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a number, got {value!r}")
    if not np.isfinite(number):
        raise InputError(f"{name} must be finite, got {number}")
    if allow_zero and number < 0:
        raise InputError(f"{name} must be nonnegative, got {number}")
    if not allow_zero and number <= 0:
        raise InputError(f"{name} must be positive, got {number}")
    return number


def validate_alpha(alpha: float) -> float:
    """Check a significance level lies strictly inside (0, 1)."""
    value = validate_positive(alpha, "alpha")
    if value >= 1:
        raise InputError(f"alpha must lie in (0, 1), got {value}")
    return value

"""
Log-log slope fitting and the reference rate exponents curves are compared to.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from ..exceptions import InputError

MIN_SLOPE_ROWS = 4


def fit_loglog_slope(x: Sequence[float], y: Sequence[float], min_rows: int = MIN_SLOPE_ROWS) -> Tuple[float, float]:
    """
    Ordinary least squares of log y on log x.

    Args:
        x: Abscissae (e.g. sample sizes), positive
        y: Ordinates (e.g. mean errors), positive
        min_rows: Fewest points accepted

    Returns:
        (slope, standard error of the slope)

    Raises:
        InputError: with fewer than ``min_rows`` points or nonpositive values
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError(f"x and y must be matching vectors, got shapes {x.shape} and {y.shape}")
    if x.shape[0] < min_rows:
        raise InputError(f"A slope fit needs at least {min_rows} rows, got {x.shape[0]}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InputError("Log-log slopes need strictly positive values")

    log_x, log_y = np.log(x), np.log(y)
    if np.all(log_y == log_y[0]):
        return 0.0, 0.0
    fitted = stats.linregress(log_x, log_y)
    return float(fitted.slope), float(fitted.stderr)


def minimax_estimation_slope(dim: int) -> float:
    """Exponent of n in the minimax estimation rate n^(-2/(2+d))."""
    return -2.0 / (2.0 + dim)


def minimax_testing_slope(dim: int) -> float:
    """Exponent of n in the critical separation epsilon ~ n^(-2/(4+d))."""
    return -2.0 / (4.0 + dim)


def guaranteed_estimation_slope(dim: int) -> float:
    """Exponent of n in the upper bound the smoother is guaranteed to attain."""
    if dim < 4:
        return -2.0 / (2.0 + dim)
    if dim == 4:
        return -1.0 / 3.0
    return -4.0 / (3.0 * dim)

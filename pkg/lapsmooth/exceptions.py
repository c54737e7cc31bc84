"""
Exception hierarchy for lapsmooth.

Each exception carries the process exit code the CLI reports for it.
"""

from typing import Any, List, Optional


class LapSmoothError(Exception):
    """Base class for all lapsmooth errors."""

    exit_code: int = 1


class InputError(LapSmoothError, ValueError):
    """Malformed input data or arguments."""

    exit_code = 2


class ConfigurationError(LapSmoothError, ValueError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class SolverError(LapSmoothError):
    """The smoothing system could not be solved to tolerance."""

    exit_code = 3

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class ConvergenceError(LapSmoothError):
    """Lanczos iteration ran out of budget before the wanted Ritz pairs converged."""

    exit_code = 3

    def __init__(self, message: str, partial_eigenvalues: Optional[List[float]] = None):
        super().__init__(message)
        self.partial_eigenvalues = list(partial_eigenvalues or [])


class CapacityError(LapSmoothError):
    """A dense computation was requested above the configured cap."""

    exit_code = 4


class UnsupportedError(LapSmoothError):
    """The requested operation is not available for this input family."""

    exit_code = 2

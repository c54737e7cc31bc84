"""Utility modules for lapsmooth."""

from .logger import StepLogger, setup_logger
from .rng import keyed_rng
from .validators import validate_file_path, validate_points, validate_vector

__all__ = [
    "StepLogger",
    "setup_logger",
    "keyed_rng",
    "validate_file_path",
    "validate_points",
    "validate_vector",
]

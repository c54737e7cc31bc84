"""
Configuration loading for lapsmooth.

Configuration is a nested dictionary: built-in defaults deep-merged with an
optional YAML file. Sections the numerics consume directly have typed views.
"""

import copy
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .exceptions import ConfigurationError

logger = structlog.get_logger(__name__)


DEFAULT_CONFIG: Dict[str, Any] = {
    "graph": {
        "kernel": "uniform",
        "leaf_size": 16,
        "brute_force_below": 256,
    },
    "solver": {
        "tol": 1e-10,
        "max_iter": 5000,
        "dense_cap": 4000,
        "retry_attempts": 3,
        "lanczos_tol": 1e-10,
        "lanczos_max_basis": 1000,
        "lanczos_max_k": 200,
    },
    "estimator": {
        "M": 1.0,
        "C0": 2.0,
        "oracle_grid_points": 15,
        "oracle_grid_decades": 4.0,
    },
    "testing": {
        "alpha": 0.05,
        "n_perm": 999,
        "calibration": "perm",
    },
    "experiments": {
        "reps": 5,
        "spectral": {
            "k_window": [0.2, 0.6],
        },
        "seminorm": {
            "p_max": 1.0,
        },
    },
    "performance": {
        "threads": "auto",
    },
    "logging": {
        "level": "INFO",
        "format": "json",
        "file_path": None,
    },
}


class GraphOptions(BaseModel):
    """Neighborhood graph construction settings."""

    model_config = ConfigDict(extra="ignore")

    kernel: str = "uniform"
    leaf_size: int = Field(16, ge=1)
    brute_force_below: int = Field(256, ge=0)


class SolverOptions(BaseModel):
    """Linear solver and eigensolver settings."""

    model_config = ConfigDict(extra="ignore")

    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(5000, ge=1)
    dense_cap: int = Field(4000, ge=2)
    retry_attempts: int = Field(3, ge=1)
    lanczos_tol: float = Field(1e-10, gt=0)
    lanczos_max_basis: int = Field(1000, ge=2)
    lanczos_max_k: int = Field(200, ge=1)


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """
    Load configuration from a YAML file over the built-in defaults.

    Args:
        config_path: Optional path to a YAML file

    Returns:
        The merged configuration dictionary
    """
    if config_path is None:
        return copy.deepcopy(DEFAULT_CONFIG)

    path = Path(config_path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found at {path}")

    with open(path, "r") as f:
        try:
            loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Config file {path} is not valid YAML: {e}")

    if not isinstance(loaded, Mapping):
        raise ConfigurationError(f"Config file {path} must contain a mapping at top level")

    logger.debug(f"Configuration loaded from {path}")
    return deep_merge(DEFAULT_CONFIG, loaded)


def get_config_value(config: Mapping[str, Any], key_path: str, default: Any = None) -> Any:
    """
    Get a configuration value using dot notation.

    Args:
        config: Configuration dictionary
        key_path: Dot-separated path to config value (e.g., 'solver.tol')
        default: Default value if key not found

    Returns:
        Configuration value or default
    """
    value: Any = config
    for key in key_path.split('.'):
        if isinstance(value, Mapping) and key in value:
            value = value[key]
        else:
            return default
    return value


def graph_options(config: Mapping[str, Any]) -> GraphOptions:
    """Typed view of the ``graph`` section."""
    try:
        return GraphOptions(**get_config_value(config, "graph", {}))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid graph configuration: {e}")


def solver_options(config: Mapping[str, Any]) -> SolverOptions:
    """Typed view of the ``solver`` section."""
    try:
        return SolverOptions(**get_config_value(config, "solver", {}))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid solver configuration: {e}")

"""
Base class and declarative configuration for experiments.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, Field, field_validator, model_validator

from ..config import deep_merge, get_config_value, graph_options, solver_options
from ..exceptions import ConfigurationError
from ..core.kernels import KernelSpec
from ..core.synthetic import DesignSpec, SignalSpec
from ..utils.io import write_json, write_table_csv
from .slopes import MIN_SLOPE_ROWS


class ExperimentKind(str, Enum):
    RATES = "rates"
    MANIFOLD = "manifold"
    SPECTRAL = "spectral"
    SEMINORM = "seminorm"
    VARIANCE_SUMS = "variance-sums"
    POWER = "power"
    CERTIFICATE = "certificate"


SLOPE_KINDS = {ExperimentKind.RATES, ExperimentKind.MANIFOLD, ExperimentKind.POWER}


class ExperimentConfig(BaseModel):
    """
    Declarative description of one experiment run.

    Fields that a kind does not use are ignored by it.
    """

    kind: ExperimentKind
    n_grid: List[int] = Field(default_factory=lambda: [1000, 1778, 3162, 5623, 10000])
    reps: int = 5
    design: DesignSpec = Field(default_factory=DesignSpec)
    signal: SignalSpec = Field(default_factory=SignalSpec)
    tuning: str = "oracle"
    rho: Optional[float] = None
    M: float = Field(1.0, gt=0)
    C0: float = Field(2.0, gt=0)
    dim_used: Optional[int] = None
    kernel: str = "uniform"
    noise: bool = True
    seed: int = Field(0, ge=0)
    out: Optional[str] = None

    # spectral / variance sums
    d_list: List[int] = Field(default_factory=lambda: [1, 2])
    t_grid: List[float] = Field(default_factory=lambda: list(np.logspace(-3, 0, 10)))
    k_window: Tuple[float, float] = (0.2, 0.6)

    # power / certificate
    alpha: float = Field(0.05, gt=0, lt=1)
    epsilons: List[float] = Field(default_factory=list)
    target_power: float = Field(0.8, gt=0, lt=1)
    calibration: str = "spectral"
    n_perm: int = Field(199, ge=99)

    # seminorm
    p_max: Optional[float] = None

    @field_validator("tuning")
    @classmethod
    def _check_tuning(cls, value: str) -> str:
        if value not in ("oracle", "theorem", "fixed"):
            raise ValueError(f"tuning must be oracle, theorem or fixed, got {value!r}")
        return value

    @field_validator("calibration")
    @classmethod
    def _check_calibration(cls, value: str) -> str:
        value = "permutation" if value == "perm" else value
        if value not in ("spectral", "permutation"):
            raise ValueError(f"calibration must be spectral or perm, got {value!r}")
        return value

    @model_validator(mode="after")
    def _check_grid(self) -> "ExperimentConfig":
        if self.reps < 3:
            raise ValueError(f"reps must be at least 3, got {self.reps}")
        if any(n < 2 for n in self.n_grid):
            raise ValueError("every n in n_grid must be at least 2")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly ascending")
        if self.kind in SLOPE_KINDS and len(self.n_grid) < MIN_SLOPE_ROWS:
            raise ValueError(f"{self.kind.value} fits a slope and needs at least {MIN_SLOPE_ROWS} n values")
        if self.tuning == "fixed" and self.rho is None:
            raise ValueError("fixed tuning needs rho")
        lo, hi = self.k_window
        if not 0 < lo < hi <= 1:
            raise ValueError(f"k_window must satisfy 0 < lo < hi <= 1, got {self.k_window}")
        return self

    @property
    def dim(self) -> int:
        """Dimension driving tuning and reference slopes."""
        if self.dim_used is not None:
            return self.dim_used
        return self.design.m or self.design.d

    def make_kernel(self, dim: Optional[int] = None) -> KernelSpec:
        return KernelSpec(self.kernel, dimension=dim or self.dim)


def parse_n_grid(text: str) -> List[int]:
    """
    Parse an n grid.

    Accepts comma lists ("250,500,1000") and ranges "lo:hi:logK" or
    "lo:hi:linK" giving K log- or linearly-spaced integers.
    """
    text = text.strip()
    try:
        if ":" not in text:
            return [int(part) for part in text.split(",") if part.strip()]
        lo_text, hi_text, spacing = text.split(":")
        lo, hi = int(lo_text), int(hi_text)
        if spacing.startswith("log"):
            values = np.geomspace(lo, hi, int(spacing[3:]))
        elif spacing.startswith("lin"):
            values = np.linspace(lo, hi, int(spacing[3:]))
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
    except ValueError as e:
        raise ConfigurationError(f"Cannot parse n grid {text!r}: {e}")
    grid = sorted({int(round(v)) for v in values})
    return grid


def build_experiment_config(kind: str, config: Dict[str, Any], overrides: Dict[str, Any]) -> ExperimentConfig:
    """
    Merge the ``experiments`` defaults, the per-kind section and explicit
    overrides (CLI flags) into an ExperimentConfig.
    """
    document: Dict[str, Any] = {"kind": kind}
    document["reps"] = get_config_value(config, "experiments.reps", 5)
    document["M"] = get_config_value(config, "estimator.M", 1.0)
    document["C0"] = get_config_value(config, "estimator.C0", 2.0)
    document["kernel"] = get_config_value(config, "graph.kernel", "uniform")
    document["alpha"] = get_config_value(config, "testing.alpha", 0.05)
    section = get_config_value(config, f"experiments.{kind}", {}) or {}
    document = deep_merge(document, section)
    document = deep_merge(document, {key: value for key, value in overrides.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(document)
    except ValueError as e:
        raise ConfigurationError(f"Invalid {kind} experiment configuration: {e}")


@dataclass
class ExperimentOutput:
    """Tables and documents an experiment produced, plus its headline result."""

    tables: Dict[str, Tuple[Sequence[str], List[Sequence[Any]]]] = field(default_factory=dict)
    documents: Dict[str, Any] = field(default_factory=dict)
    result: Any = None
    summary: Dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        """Write every table as CSV and every document as JSON under out_dir."""
        out_path = Path(out_dir)
        written = []
        for name, (header, rows) in sorted(self.tables.items()):
            written.append(write_table_csv(str(out_path / name), header, rows))
        for name, document in sorted(self.documents.items()):
            written.append(write_json(str(out_path / name), document))
        return written


class Experiment(ABC):
    """
    Abstract base class for experiments.
    """

    kind: ExperimentKind

    def __init__(self, config: Dict[str, Any], logger: structlog.BoundLogger):
        """
        Initialize experiment.

        Args:
            config: Configuration dictionary
            logger: Logger instance
        """
        self.config = config
        self.logger = logger
        self.solver = solver_options(config)
        self.graph_options = graph_options(config)

    @abstractmethod
    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        """
        Run the experiment.

        Args:
            cfg: Experiment description
            threads: Worker threads for replicates

        Returns:
            ExperimentOutput with the tables and documents to write
        """

    def _get_config_value(self, key_path: str, default: Any = None) -> Any:
        """
        Get a configuration value using dot notation.

        Args:
            key_path: Dot-separated path to config value (e.g., 'solver.dense_cap')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        return get_config_value(self.config, key_path, default)

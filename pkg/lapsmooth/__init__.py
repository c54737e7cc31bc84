"""
lapsmooth - Laplacian smoothing over neighborhood graphs

Estimation and goodness-of-fit testing with the graph Laplacian penalty,
synthetic designs and signals, and reproducible rate experiments.
"""

__version__ = "0.1.0"
__author__ = "lapsmooth developers"

from .core import (
    KernelSpec,
    NeighborhoodGraph,
    build_graph,
    fit,
    gof_test_permutation,
    gof_test_spectral,
    resolve_tuning,
)
from .exceptions import LapSmoothError
from .runner import ExperimentRunner

__all__ = [
    "ExperimentRunner",
    "KernelSpec",
    "NeighborhoodGraph",
    "build_graph",
    "fit",
    "gof_test_spectral",
    "gof_test_permutation",
    "resolve_tuning",
    "LapSmoothError",
]

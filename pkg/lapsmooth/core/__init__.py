"""Numerical core: kernels, graphs, solvers, the estimator, tests and synthetic data."""

from .estimator import (
    SmoothingFit,
    TuningSpec,
    VoronoiExtension,
    bias_variance_certificate,
    evaluate,
    extend_voronoi,
    fit,
    in_sample_mse,
    resolve_tuning,
)
from .gof import (
    GofTestResult,
    PowerCurve,
    gof_test_permutation,
    gof_test_spectral,
    power_curve,
    spectral_threshold,
    test_statistic,
)
from .graph import (
    GraphDiagnostics,
    NeighborhoodGraph,
    PointCloud,
    apply_laplacian,
    build_graph,
    graph_diagnostics,
    laplacian_quadratic_form,
)
from .kernels import KernelSpec
from .solver import SolveReport, SpectrumResult, full_spectrum, partial_spectrum, solve_smoothing_system
from .synthetic import (
    Dataset,
    DesignSpec,
    SignalSpec,
    evaluate_signal,
    make_dataset,
    sample_design,
    sobolev_seminorm_oracle,
)

__all__ = [
    "KernelSpec",
    "PointCloud",
    "NeighborhoodGraph",
    "GraphDiagnostics",
    "build_graph",
    "laplacian_quadratic_form",
    "apply_laplacian",
    "graph_diagnostics",
    "SolveReport",
    "SpectrumResult",
    "solve_smoothing_system",
    "full_spectrum",
    "partial_spectrum",
    "TuningSpec",
    "SmoothingFit",
    "VoronoiExtension",
    "resolve_tuning",
    "fit",
    "in_sample_mse",
    "extend_voronoi",
    "evaluate",
    "bias_variance_certificate",
    "GofTestResult",
    "PowerCurve",
    "test_statistic",
    "spectral_threshold",
    "gof_test_spectral",
    "gof_test_permutation",
    "power_curve",
    "DesignSpec",
    "SignalSpec",
    "Dataset",
    "sample_design",
    "evaluate_signal",
    "make_dataset",
    "sobolev_seminorm_oracle",
]

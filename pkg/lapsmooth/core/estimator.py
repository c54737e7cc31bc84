"""
Laplacian smoothing estimator.

f_hat minimizes ||y - f||^2 + rho * fᵀLf, i.e. solves (I + rho L) f = y on
the neighborhood graph of the design. Tuning follows the rate-optimal rules
for (r, rho), or a fixed value, or an oracle grid around the rule.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, Field
from scipy.spatial import cKDTree
from tenacity import Retrying, retry_if_result, stop_after_attempt

from ..config import GraphOptions, SolverOptions
from ..exceptions import CapacityError, InputError, SolverError
from ..utils.validators import validate_points, validate_positive, validate_vector
from .graph import NeighborhoodGraph, PointCloud, as_point_cloud, build_graph, laplacian_quadratic_form
from .kernels import KernelSpec
from .solver import SolveReport, SpectrumResult, shrinkage_factors, solve_smoothing_system
from .synthetic import DesignSpec, sample_design

logger = structlog.get_logger(__name__)

OPTIMALITY_TOLERANCE = 1e-6
TIE_TOLERANCE = 1e-12


class TuningMode(str, Enum):
    THEOREM_RULE = "theorem-rule"
    FIXED = "fixed"
    ORACLE_GRID = "oracle-grid"


class Task(str, Enum):
    ESTIMATION = "estimation"
    TESTING = "testing"


class RadiusRule(str, Enum):
    CONNECTIVITY = "connectivity"
    EXPLICIT = "explicit"


class TuningSpec(BaseModel):
    """Resolved (r, rho) with the inputs and rule that produced them."""

    mode: TuningMode
    task: Task
    n: int
    M: float
    dim_used: int
    rho: float
    r: float
    r_rule: RadiusRule
    C0: float = 2.0
    warnings: List[str] = Field(default_factory=list)


def connectivity_radius(n: int, dim: int, C0: float = 2.0) -> float:
    """r = C0 * (log n / n)^(1/dim)."""
    return float(C0 * (np.log(n) / n) ** (1.0 / dim))


def theorem_rho(n: int, r: float, dim: int, M: float = 1.0, task: Union[Task, str] = Task.ESTIMATION) -> float:
    """
    Rate-optimal penalty weight for the given task and dimension.

    Estimation: M^(-4/(2+d)) (n r^(d+2))^(-1) n^(-2/(2+d)) for d < 4,
    M^(-2/3) (n r^6)^(-1) (log n / n)^(1/3) for d = 4 and
    M^(-2/3) (n r^(d+2))^(-1) n^(-4/(3d)) for d >= 5.
    Testing: (n r^(d+2))^(-1) n^(-4/(4+d)) M^(-8/(4+d)).
    """
    task = Task(task)
    graph_scale = 1.0 / (n * r ** (dim + 2))
    if task == Task.TESTING:
        return float(graph_scale * n ** (-4.0 / (4 + dim)) * M ** (-8.0 / (4 + dim)))
    if dim < 4:
        return float(M ** (-4.0 / (2 + dim)) * graph_scale * n ** (-2.0 / (2 + dim)))
    if dim == 4:
        return float(M ** (-2.0 / 3.0) * graph_scale * (np.log(n) / n) ** (1.0 / 3.0))
    return float(M ** (-2.0 / 3.0) * graph_scale * n ** (-4.0 / (3.0 * dim)))


def radius_upper_endpoint(n: int, dim: int, M: float, task: Union[Task, str]) -> Optional[float]:
    """Largest radius the rate guarantees cover (dim < 4 only), or None."""
    if dim >= 4:
        return None
    if Task(task) == Task.TESTING:
        return float(M ** ((dim - 8.0) / (8 + 2 * dim)) * n ** ((dim - 20.0) / (32 + 8 * dim)))
    return float(M ** ((dim - 4.0) / (4 + 2 * dim)) * n ** (-3.0 / (4 + 2 * dim)))


def admissible_M(n: int, dim: int, task: Union[Task, str]) -> float:
    """Largest Sobolev radius M for which the rate guarantees are meaningful."""
    if Task(task) == Task.TESTING:
        return float(n ** 0.125 if dim == 1 else n ** ((4.0 - dim) / (4.0 * dim)))
    return float(n ** (1.0 / dim))


def resolve_tuning(
    n: int,
    dim_used: int,
    M: float = 1.0,
    task: Union[Task, str] = Task.ESTIMATION,
    r: Optional[float] = None,
    rho: Optional[float] = None,
    C0: float = 2.0,
) -> TuningSpec:
    """
    Resolve the graph radius and penalty weight.

    Args:
        n: Sample size (>= 2)
        dim_used: d, or m under the manifold hypothesis
        M: Sobolev radius (> 0)
        task: "estimation" or "testing"
        r: Explicit radius; default is the connectivity rule
        rho: Fixed penalty weight; default is the theorem rule
        C0: Connectivity-rule constant

    Returns:
        TuningSpec. Radii above the guaranteed range and M above its
        admissible range are recorded in ``warnings``, never raised.
    """
    if int(n) < 2:
        raise InputError(f"n must be at least 2, got {n}")
    n = int(n)
    if int(dim_used) < 1:
        raise InputError(f"dim_used must be a positive integer, got {dim_used}")
    dim = int(dim_used)
    M = validate_positive(M, "M")
    task = Task(task)

    if r is None:
        r_value = connectivity_radius(n, dim, validate_positive(C0, "C0"))
        r_rule = RadiusRule.CONNECTIVITY
    else:
        r_value = validate_positive(r, "r")
        r_rule = RadiusRule.EXPLICIT

    if rho is None:
        rho_value = theorem_rho(n, r_value, dim, M, task)
        mode = TuningMode.THEOREM_RULE
    else:
        rho_value = validate_positive(rho, "rho", allow_zero=True)
        mode = TuningMode.FIXED

    warnings: List[str] = []
    upper = radius_upper_endpoint(n, dim, M, task)
    if upper is not None and r_value > upper:
        warnings.append(f"r={r_value:.4g} exceeds the {task.value} radius upper endpoint {upper:.4g}")
    M_max = admissible_M(n, dim, task)
    if M > M_max:
        warnings.append(f"M={M:.4g} exceeds the admissible {task.value} radius {M_max:.4g}")
    for message in warnings:
        logger.warning(f"Tuning warning: {message}", n=n, dim_used=dim)

    return TuningSpec(
        mode=mode,
        task=task,
        n=n,
        M=M,
        dim_used=dim,
        rho=rho_value,
        r=r_value,
        r_rule=r_rule,
        C0=C0,
        warnings=warnings,
    )


def oracle_rho_grid(center: float, points: int = 15, decades: float = 4.0) -> np.ndarray:
    """Log-spaced rho values spanning ``decades`` decades centered at ``center``."""
    center = validate_positive(center, "center")
    middle = np.log10(center)
    return np.logspace(middle - decades / 2.0, middle + decades / 2.0, int(points))


@dataclass(frozen=True)
class SmoothingFit:
    """
    A converged Laplacian smoothing fit.

    Attributes:
        f_hat: Fitted values at the design points
        y: Responses the fit was computed from
        points: Design
        tuning: Tuning used
        solve: Solver report
        graph: Graph the penalty was built on
        gradient_norm: ||2(f_hat - y) + 2 rho L f_hat||_inf
        in_sample_mse: Filled when the truth at the design points was supplied
    """

    f_hat: np.ndarray
    y: np.ndarray
    points: PointCloud
    tuning: TuningSpec
    solve: SolveReport
    graph: NeighborhoodGraph
    gradient_norm: float
    in_sample_mse: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.f_hat.shape[0])


def _solve_with_escalation(
    graph: NeighborhoodGraph,
    y: np.ndarray,
    rho: float,
    options: SolverOptions,
):
    budget = {"max_iter": options.max_iter}

    def attempt():
        result = solve_smoothing_system(graph, y, rho, tol=options.tol, max_iter=budget["max_iter"])
        if not result[1].converged:
            logger.warning(
                f"Solve did not converge in {budget['max_iter']} iterations; doubling budget",
                residual=result[1].final_residual,
            )
            budget["max_iter"] *= 2
        return result

    retryer = Retrying(
        stop=stop_after_attempt(options.retry_attempts),
        retry=retry_if_result(lambda result: not result[1].converged),
        retry_error_callback=lambda state: state.outcome.result(),
    )
    return retryer(attempt)


def fit(
    points: Union[PointCloud, np.ndarray],
    y,
    tuning: TuningSpec,
    kernel: KernelSpec,
    graph: Optional[NeighborhoodGraph] = None,
    f0_at_points=None,
    options: Optional[SolverOptions] = None,
    graph_options: Optional[GraphOptions] = None,
) -> SmoothingFit:
    """
    Fit the Laplacian smoothing estimator.

    Args:
        points: Design
        y: Responses
        tuning: Resolved tuning (r and rho)
        kernel: Kernel for the graph
        graph: Prebuilt graph at ``tuning.r``; built here when omitted
        f0_at_points: Truth at the design, fills ``in_sample_mse``
        options: Solver options
        graph_options: Neighbor search settings used when the graph is built here

    Returns:
        SmoothingFit

    Raises:
        SolverError: if the solve fails after escalation or the optimality check fails
    """
    cloud = as_point_cloud(points)
    y = validate_vector(y, length=cloud.n, name="y")
    options = options or SolverOptions()
    if graph is None:
        graph = build_graph(cloud, tuning.r, kernel, options=graph_options)
    elif graph.n != cloud.n:
        raise InputError(f"Graph has {graph.n} vertices but there are {cloud.n} points")

    f_hat, report = _solve_with_escalation(graph, y, tuning.rho, options)
    if not report.converged:
        raise SolverError(
            f"Smoothing solve failed to reach tol={options.tol} "
            f"(residual {report.final_residual:.3e} after {report.iterations} iterations)",
            report=report,
        )

    # gradient of the objective is 2((I + rho L) f_hat - y)
    gradient_norm = 2.0 * report.residual_inf_norm
    y_scale = float(np.max(np.abs(y))) if y.size else 0.0
    if gradient_norm > OPTIMALITY_TOLERANCE * y_scale:
        raise SolverError(
            f"Optimality check failed: gradient norm {gradient_norm:.3e} exceeds "
            f"{OPTIMALITY_TOLERANCE} * ||y||_inf",
            report=report,
        )

    mse = None
    if f0_at_points is not None:
        mse = _mse(f_hat, validate_vector(f0_at_points, length=cloud.n, name="f0_at_points"))

    return SmoothingFit(
        f_hat=f_hat,
        y=y,
        points=cloud,
        tuning=tuning,
        solve=report,
        graph=graph,
        gradient_norm=gradient_norm,
        in_sample_mse=mse,
    )


def fit_path(
    points: Union[PointCloud, np.ndarray],
    y,
    tuning: TuningSpec,
    kernel: KernelSpec,
    rhos: Sequence[float],
    graph: Optional[NeighborhoodGraph] = None,
    f0_at_points=None,
    options: Optional[SolverOptions] = None,
    graph_options: Optional[GraphOptions] = None,
) -> List[SmoothingFit]:
    """Fit several penalty weights on one graph."""
    cloud = as_point_cloud(points)
    graph = graph if graph is not None else build_graph(cloud, tuning.r, kernel, options=graph_options)
    fits = []
    for rho in rhos:
        grid_tuning = tuning.model_copy(update={"rho": float(rho), "mode": TuningMode.ORACLE_GRID})
        fits.append(fit(cloud, y, grid_tuning, kernel, graph=graph, f0_at_points=f0_at_points, options=options))
    return fits


def _mse(f_hat: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean((f_hat - truth) ** 2))


def in_sample_mse(fit: SmoothingFit, f0_at_points) -> float:
    """(1/n) * sum_i (f_hat_i - f0(X_i))^2."""
    truth = validate_vector(f0_at_points, length=fit.n, name="f0_at_points")
    return _mse(fit.f_hat, truth)


@dataclass(frozen=True)
class VoronoiExtension:
    """Piecewise-constant extension of f_hat over the Voronoi cells of the design."""

    anchors: np.ndarray
    values: np.ndarray
    index: cKDTree

    def __call__(self, x) -> Union[float, np.ndarray]:
        return evaluate(self, x)


def extend_voronoi(fit: SmoothingFit) -> VoronoiExtension:
    """Build the nearest-design-point extension of a fit."""
    if fit.n == 0:
        raise InputError("Cannot extend an empty fit")
    anchors = fit.points.points
    return VoronoiExtension(anchors=anchors, values=fit.f_hat.copy(), index=cKDTree(anchors))


def evaluate(ext: VoronoiExtension, x) -> Union[float, np.ndarray]:
    """
    Value of the anchor nearest to x; ties go to the lowest anchor index.

    A single point returns a float, an (m, d) array returns m values.
    """
    array = np.asarray(x, dtype=np.float64)
    single = array.ndim <= 1
    d = ext.anchors.shape[1]
    queries = validate_points(array.reshape(-1, d), min_points=1)

    k = min(2, ext.anchors.shape[0])
    dist, idx = ext.index.query(queries, k=k)
    dist = dist.reshape(len(queries), k)
    idx = idx.reshape(len(queries), k)
    chosen = idx[:, 0].copy()
    if k == 2:
        for row in np.nonzero(dist[:, 1] <= dist[:, 0] * (1.0 + TIE_TOLERANCE))[0]:
            radius = dist[row, 0] * (1.0 + TIE_TOLERANCE) + np.finfo(float).tiny
            candidates = ext.index.query_ball_point(queries[row], radius)
            chosen[row] = min(candidates) if candidates else idx[row, 0]

    values = ext.values[chosen]
    return float(values[0]) if single else values


def out_of_sample_error(
    ext: VoronoiExtension,
    truth: Callable[[np.ndarray], np.ndarray],
    design: DesignSpec,
    n_mc: int = 20_000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of ||ext - f0||^2 in L^2(P)."""
    sample = sample_design(design, n_mc, seed=seed, index=1)
    diff = evaluate(ext, sample.points) - np.asarray(truth(sample.points), dtype=np.float64)
    return float(np.mean(diff ** 2))


class CertificateBounds(BaseModel):
    """Bias and variance terms of the in-sample error bound."""

    bias_bound: float
    variance_bound: float
    coverage_floor: float

    @property
    def total(self) -> float:
        return self.bias_bound + self.variance_bound


def bias_variance_certificate(fit: SmoothingFit, f0_at_points, spectrum: SpectrumResult) -> CertificateBounds:
    """
    bias = (2 rho / n) f0ᵀLf0, variance = (10 / n) sum_k (rho lambda_k + 1)^(-2).

    ``coverage_floor`` = 1 - exp(-sum_k (rho lambda_k + 1)^(-2)) is the
    guaranteed probability that the in-sample MSE stays below their sum.

    Raises:
        CapacityError: for partial spectra
    """
    if not spectrum.is_full or spectrum.n != fit.n:
        raise CapacityError("The certificate needs the full spectrum of the fitted graph")
    f0 = validate_vector(f0_at_points, length=fit.n, name="f0_at_points")
    n, rho = fit.n, fit.tuning.rho
    squared = float(np.sum(shrinkage_factors(spectrum, rho, power=2)))
    return CertificateBounds(
        bias_bound=2.0 * rho / n * laplacian_quadratic_form(fit.graph, f0),
        variance_bound=10.0 / n * squared,
        coverage_floor=float(1.0 - np.exp(-squared)),
    )

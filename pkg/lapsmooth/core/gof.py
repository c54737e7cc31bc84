"""
Goodness-of-fit testing with the Laplacian smoothing statistic.

The statistic is T = ||f_hat||^2 / n for the smoothed responses. It is
calibrated either by the spectral threshold, which needs every Laplacian
eigenvalue, or by permuting the responses over the fixed design.
"""

from enum import Enum
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, Field

from ..config import GraphOptions, SolverOptions
from ..exceptions import CapacityError, InputError, SolverError
from ..utils.parallel import ordered_map
from ..utils.rng import keyed_rng
from ..utils.validators import validate_alpha, validate_positive, validate_vector
from .estimator import SmoothingFit, TuningSpec, fit, resolve_tuning
from .graph import NeighborhoodGraph, PointCloud, as_point_cloud, build_graph
from .kernels import KernelSpec
from .solver import SpectrumResult, full_spectrum, shrinkage_factors, solve_smoothing_system
from .synthetic import DesignSpec, SignalSpec, make_dataset, signal_l2_norm

logger = structlog.get_logger(__name__)

MIN_PERMUTATIONS = 99
PERMUTATION_CHUNK = 128
PERMUTATION_TIE_TOLERANCE = 1e-12


class Calibration(str, Enum):
    SPECTRAL = "spectral"
    PERMUTATION = "permutation"


class GofTestResult(BaseModel):
    """Outcome of one goodness-of-fit test."""

    statistic: float
    alpha: float
    reject: bool
    calibration: Calibration
    threshold: Optional[float] = None
    p_value: Optional[float] = None
    n_perm: Optional[int] = None
    rho: float
    r: Optional[float] = None
    n: int


class PowerRow(BaseModel):
    epsilon: float
    rejection_rate: float = Field(ge=0.0, le=1.0)
    mc_std_err: float


class PowerCurve(BaseModel):
    """Empirical rejection rate against the L^2(P) separation epsilon."""

    n: int
    reps: int
    alpha: float
    calibration: Calibration
    rows: List[PowerRow]
    null_rejection_rate: float


def test_statistic(fit_or_values: Union[SmoothingFit, np.ndarray]) -> float:
    """T = ||f_hat||^2 / n."""
    values = fit_or_values.f_hat if isinstance(fit_or_values, SmoothingFit) else validate_vector(fit_or_values)
    return float(values @ values) / values.shape[0]


# pytest would otherwise try to collect the function above
test_statistic.__test__ = False


def spectral_threshold(spectrum: SpectrumResult, rho: float, alpha: float, n: Optional[int] = None) -> float:
    """
    t_alpha = (1/n) sum_k s_k^2 + (1/n) sqrt((2/alpha) sum_k s_k^4), s_k = 1/(rho lambda_k + 1).

    Raises:
        InputError: for a negative rho
        CapacityError: for partial spectra; use permutation calibration instead
    """
    alpha = validate_alpha(alpha)
    rho = validate_positive(rho, "rho", allow_zero=True)
    n = spectrum.n if n is None else int(n)
    if not spectrum.is_full or spectrum.n != n:
        raise CapacityError(
            "The spectral threshold needs all n eigenvalues; use permutation calibration"
        )
    if rho == 0:
        return 1.0 + np.sqrt(2.0 / (alpha * n))
    s = shrinkage_factors(spectrum, rho)
    s2 = s * s
    return float(np.sum(s2) / n + np.sqrt(2.0 / alpha * np.sum(s2 * s2)) / n)


class SmoothingStatistic:
    """
    T(y) for many response vectors on one graph and one rho.

    With the eigendecomposition at hand T(y) = (1/n) sum_k s_k^2 (v_kᵀy)^2,
    which evaluates a whole batch with two matrix products; above the dense
    cap each column is solved by conjugate gradients.
    """

    def __init__(
        self,
        graph: NeighborhoodGraph,
        rho: float,
        method: str = "auto",
        dense_cap: int = 4000,
        options: Optional[SolverOptions] = None,
    ):
        self.graph = graph
        self.rho = validate_positive(rho, "rho", allow_zero=True)
        self.options = options or SolverOptions()
        if method == "auto":
            method = "spectral" if graph.n <= dense_cap else "iterative"
        if method not in ("spectral", "iterative"):
            raise InputError(f"Unknown statistic method {method!r}")
        self.method = method
        self.spectrum: Optional[SpectrumResult] = None
        if method == "spectral" and self.rho > 0:
            self.spectrum = full_spectrum(graph, dense_cap=dense_cap, eigenvectors=True)
            self._shrink = shrinkage_factors(self.spectrum, self.rho)

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        batch = Y[:, None] if Y.ndim == 1 else Y
        n = self.graph.n
        if self.rho == 0:
            return np.sum(batch * batch, axis=0) / n
        if self.spectrum is not None:
            coefficients = self._shrink[:, None] * (self.spectrum.eigenvectors.T @ batch)
            return np.sum(coefficients * coefficients, axis=0) / n
        values = np.empty(batch.shape[1])
        for j in range(batch.shape[1]):
            f_hat, report = solve_smoothing_system(
                self.graph, batch[:, j], self.rho, tol=self.options.tol, max_iter=self.options.max_iter
            )
            if not report.converged:
                raise SolverError("Permutation solve did not converge", report=report)
            values[j] = float(f_hat @ f_hat) / n
        return values


def _centered(y: np.ndarray, null_values) -> np.ndarray:
    if null_values is None:
        return y
    return y - validate_vector(null_values, length=y.shape[0], name="null_values")


def gof_test_spectral(
    points: Union[PointCloud, np.ndarray],
    y,
    tuning: TuningSpec,
    kernel: KernelSpec,
    alpha: float = 0.05,
    null_values=None,
    dense_cap: int = 4000,
    options: Optional[SolverOptions] = None,
    graph_options: Optional[GraphOptions] = None,
) -> GofTestResult:
    """
    Test H0: f0 = f0* with the spectral threshold.

    ``null_values`` holds f0*(X_i); it is subtracted from y before fitting.
    """
    alpha = validate_alpha(alpha)
    cloud = as_point_cloud(points)
    y = _centered(validate_vector(y, length=cloud.n, name="y"), null_values)
    graph = build_graph(cloud, tuning.r, kernel, options=graph_options)
    if graph.n > dense_cap:
        raise CapacityError(
            f"Spectral calibration of n={graph.n} exceeds the dense cap {dense_cap}; "
            f"use permutation calibration"
        )
    result = fit(cloud, y, tuning, kernel, graph=graph, options=options)
    statistic = test_statistic(result)
    threshold = spectral_threshold(full_spectrum(graph, dense_cap=dense_cap), tuning.rho, alpha, cloud.n)
    return GofTestResult(
        statistic=statistic,
        threshold=threshold,
        alpha=alpha,
        reject=statistic > threshold,
        calibration=Calibration.SPECTRAL,
        rho=tuning.rho,
        r=tuning.r,
        n=cloud.n,
    )


def permutation_p_value(observed: float, permuted: Sequence[float]) -> float:
    """
    (1 + #{permuted >= observed}) / (n_perm + 1).

    Statistics within a relative 1e-12 of the observed one count as ties;
    batched and single-column evaluations differ in the last bits.
    """
    permuted = np.asarray(permuted, dtype=np.float64)
    slack = PERMUTATION_TIE_TOLERANCE * abs(observed)
    return float((1 + np.count_nonzero(permuted >= observed - slack)) / (permuted.shape[0] + 1))


def gof_test_permutation(
    points: Union[PointCloud, np.ndarray],
    y,
    tuning: TuningSpec,
    kernel: KernelSpec,
    alpha: float = 0.05,
    n_perm: int = 999,
    seed: int = 0,
    null_values=None,
    threads: Union[int, str] = 1,
    dense_cap: int = 4000,
    options: Optional[SolverOptions] = None,
    graph_options: Optional[GraphOptions] = None,
) -> GofTestResult:
    """
    Test H0 by permuting the responses over the fixed design and graph.

    Permutation j draws from the stream keyed by (seed, j), so the p-value
    does not depend on the thread count.
    """
    alpha = validate_alpha(alpha)
    if int(n_perm) < MIN_PERMUTATIONS:
        raise InputError(f"n_perm must be at least {MIN_PERMUTATIONS}, got {n_perm}")
    n_perm = int(n_perm)
    cloud = as_point_cloud(points)
    y = _centered(validate_vector(y, length=cloud.n, name="y"), null_values)
    graph = build_graph(cloud, tuning.r, kernel, options=graph_options)
    statistic_of = SmoothingStatistic(graph, tuning.rho, dense_cap=dense_cap, options=options)
    observed = float(statistic_of(y)[0])

    def chunk_statistics(start: int) -> np.ndarray:
        stop = min(start + PERMUTATION_CHUNK, n_perm)
        batch = np.empty((cloud.n, stop - start))
        for j in range(start, stop):
            batch[:, j - start] = keyed_rng(seed, "permutation", cloud.n, j).permutation(y)
        return statistic_of(batch)

    chunks = ordered_map(chunk_statistics, list(range(0, n_perm, PERMUTATION_CHUNK)), threads=threads)
    p_value = permutation_p_value(observed, np.concatenate(chunks))
    return GofTestResult(
        statistic=observed,
        p_value=p_value,
        n_perm=n_perm,
        alpha=alpha,
        reject=p_value <= alpha,
        calibration=Calibration.PERMUTATION,
        rho=tuning.rho,
        r=tuning.r,
        n=cloud.n,
    )


def low_smoothness_test(y, alpha: float = 0.05, null_values=None) -> GofTestResult:
    """
    The rho = 0 test: T = ||y||^2 / n against 1 + n^(-1/2) sqrt(2 / alpha).

    No graph is involved since the smoother interpolates the responses.
    """
    alpha = validate_alpha(alpha)
    y = validate_vector(y, name="y")
    y = _centered(y, null_values)
    statistic = test_statistic(y)
    threshold = 1.0 + np.sqrt(2.0 / (alpha * y.shape[0]))
    return GofTestResult(
        statistic=statistic,
        threshold=threshold,
        alpha=alpha,
        reject=statistic > threshold,
        calibration=Calibration.SPECTRAL,
        rho=0.0,
        r=None,
        n=y.shape[0],
    )


def power_curve(
    design: DesignSpec,
    signal: SignalSpec,
    n: int,
    epsilons: Sequence[float],
    reps: int,
    alpha: float = 0.05,
    M: float = 1.0,
    kernel: Optional[KernelSpec] = None,
    C0: float = 2.0,
    calibration: Union[Calibration, str] = Calibration.SPECTRAL,
    n_perm: int = 199,
    seed: int = 0,
    threads: Union[int, str] = 1,
    dense_cap: int = 4000,
    graph_options: Optional[GraphOptions] = None,
) -> PowerCurve:
    """
    Empirical power of the test against f0 = epsilon * signal / ||signal||_{L^2(P)}.

    Every replicate draws one design and one noise vector and reuses them
    across the epsilon grid, so the curve compares epsilons on common data.

    Args:
        design: Design distribution
        signal: Direction of the alternative; rescaled to unit L^2(P) norm
        n: Sample size
        epsilons: Separations to evaluate
        reps: Replicates per epsilon
        alpha: Test level
        M: Sobolev radius for the testing tuning rule
        kernel: Graph kernel (uniform in the design's dimension by default)
        C0: Connectivity-rule constant
        calibration: "spectral" or "permutation"
        n_perm: Permutations per test under permutation calibration
        seed: Master seed
        threads: Worker threads over replicates
        dense_cap: Dense eigendecomposition cap
        graph_options: Neighbor search settings
    """
    alpha = validate_alpha(alpha)
    calibration = Calibration(calibration)
    if int(reps) < 1:
        raise InputError(f"reps must be positive, got {reps}")
    reps = int(reps)
    grid = np.asarray(sorted(float(e) for e in epsilons))
    if np.any(grid < 0):
        raise InputError("epsilons must be nonnegative")
    eval_grid = grid if grid.size and grid[0] == 0.0 else np.concatenate([[0.0], grid])

    dim = design.m or design.d
    kernel = kernel or KernelSpec("uniform", dimension=dim)
    tuning = resolve_tuning(n, dim, M, "testing", C0=C0)
    unit_norm = signal_l2_norm(signal.scaled(1.0), design)
    if unit_norm == 0:
        raise InputError("The alternative direction has zero L^2 norm")
    unit_signal = signal.scaled(1.0 / unit_norm)

    def replicate(rep: int) -> np.ndarray:
        data = make_dataset(design, unit_signal, n, seed=seed, index=rep)
        noise = data.y - data.f0_at_points
        Y = noise[:, None] + np.outer(data.f0_at_points, eval_grid)
        graph = build_graph(data.points, tuning.r, kernel, options=graph_options)
        statistic_of = SmoothingStatistic(graph, tuning.rho, dense_cap=dense_cap)
        observed = statistic_of(Y)
        if calibration == Calibration.SPECTRAL:
            spectrum = statistic_of.spectrum or full_spectrum(graph, dense_cap=dense_cap)
            return observed > spectral_threshold(spectrum, tuning.rho, alpha, n)
        decisions = np.empty(eval_grid.shape[0], dtype=bool)
        for col in range(eval_grid.shape[0]):
            permuted = np.column_stack([
                keyed_rng(seed, "permutation", n, rep, col, j).permutation(Y[:, col])
                for j in range(n_perm)
            ])
            decisions[col] = permutation_p_value(observed[col], statistic_of(permuted)) <= alpha
        return decisions

    decisions = np.vstack(ordered_map(replicate, list(range(reps)), threads=threads))
    rates = decisions.mean(axis=0)
    rows = [
        PowerRow(epsilon=float(e), rejection_rate=float(p), mc_std_err=float(np.sqrt(p * (1 - p) / reps)))
        for e, p in zip(eval_grid, rates)
        if e in grid
    ]
    logger.info(
        f"Power curve at n={n} over {len(rows)} separations",
        reps=reps,
        null_rate=float(rates[0]),
    )
    return PowerCurve(
        n=int(n),
        reps=reps,
        alpha=alpha,
        calibration=calibration,
        rows=rows,
        null_rejection_rate=float(rates[0]),
    )


def critical_epsilon(curve: PowerCurve, target_power: float = 0.8) -> Optional[float]:
    """
    Smallest separation at which the power curve reaches ``target_power``,
    interpolated linearly in log(epsilon); None if it never does.
    """
    rows = sorted(curve.rows, key=lambda row: row.epsilon)
    previous = None
    for row in rows:
        if row.rejection_rate >= target_power:
            if previous is None or previous.epsilon <= 0:
                return row.epsilon
            lo, hi = previous, row
            weight = (target_power - lo.rejection_rate) / (hi.rejection_rate - lo.rejection_rate)
            log_eps = np.log(lo.epsilon) + weight * (np.log(hi.epsilon) - np.log(lo.epsilon))
            return float(np.exp(log_eps))
        previous = row
    return None

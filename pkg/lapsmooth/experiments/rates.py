"""
Estimation-rate experiments: in-sample error of the smoother against n.
"""

from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from ..config import GraphOptions, SolverOptions
from ..core.estimator import fit_path, oracle_rho_grid, resolve_tuning
from ..core.graph import build_graph
from ..core.synthetic import DesignFamily, DesignSpec, make_dataset
from ..exceptions import ConfigurationError, SolverError
from ..utils.parallel import ordered_map
from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput
from .slopes import fit_loglog_slope, guaranteed_estimation_slope, minimax_estimation_slope


class RateRow(BaseModel):
    n: int
    mean_error: float
    std_error: float
    rho: float


class RateCurve(BaseModel):
    """Mean in-sample error per n with its fitted log-log slope."""

    kind: str
    dim_used: int
    rows: List[RateRow]
    fitted_slope: Optional[float] = None
    slope_std_err: Optional[float] = None
    reference_slope: float
    theorem_slope: float

    def curve_rows(self) -> List[List[Any]]:
        return [[row.n, row.mean_error, row.std_error] for row in self.rows]


def _replicate_errors(
    cfg: ExperimentConfig,
    n: int,
    rep: int,
    grid_points: int,
    grid_decades: float,
    solver: SolverOptions,
    graph_options: Optional[GraphOptions] = None,
) -> Dict[str, np.ndarray]:
    dim = cfg.dim
    kernel = cfg.make_kernel(dim)
    data = make_dataset(cfg.design, cfg.signal, n, seed=cfg.seed, index=rep, noise=cfg.noise)
    tuning = resolve_tuning(n, dim, cfg.M, "estimation", rho=cfg.rho if cfg.tuning == "fixed" else None, C0=cfg.C0)
    if cfg.tuning == "oracle":
        rhos = oracle_rho_grid(tuning.rho, grid_points, grid_decades)
    else:
        rhos = np.array([tuning.rho])

    graph = build_graph(data.points, tuning.r, kernel, options=graph_options)
    try:
        fits = fit_path(data.points, data.y, tuning, kernel, rhos, graph=graph,
                        f0_at_points=data.f0_at_points, options=solver)
    except SolverError as e:
        raise SolverError(f"Replicate {rep} at n={n} failed: {e}", report=e.report)
    return {"rhos": rhos, "errors": np.array([f.in_sample_mse for f in fits])}


def run_rate_experiment(
    cfg: ExperimentConfig,
    solver: Optional[SolverOptions] = None,
    threads: Union[int, str] = 1,
    grid_points: int = 15,
    grid_decades: float = 4.0,
    graph_options: Optional[GraphOptions] = None,
) -> RateCurve:
    """
    Mean in-sample MSE over ``cfg.reps`` replicates for every n in the grid.

    Oracle tuning fits a log grid of rho around the theorem rule on each
    replicate and keeps, per n, the rho with the smallest error averaged
    over replicates.
    """
    solver = solver or SolverOptions()
    jobs = [(n, rep) for n in cfg.n_grid for rep in range(cfg.reps)]
    outcomes = ordered_map(
        lambda job: _replicate_errors(cfg, job[0], job[1], grid_points, grid_decades, solver, graph_options),
        jobs,
        threads=threads,
    )

    rows: List[RateRow] = []
    for i, n in enumerate(cfg.n_grid):
        block = outcomes[i * cfg.reps:(i + 1) * cfg.reps]
        errors = np.vstack([outcome["errors"] for outcome in block])
        best = int(np.argmin(errors.mean(axis=0)))
        chosen = errors[:, best]
        rows.append(RateRow(
            n=n,
            mean_error=float(chosen.mean()),
            std_error=float(chosen.std(ddof=1) / np.sqrt(cfg.reps)),
            rho=float(block[0]["rhos"][best]),
        ))

    means = [row.mean_error for row in rows]
    slope = stderr = None
    if all(value > 0 for value in means):
        slope, stderr = fit_loglog_slope(cfg.n_grid, means)

    return RateCurve(
        kind=cfg.kind.value,
        dim_used=cfg.dim,
        rows=rows,
        fitted_slope=slope,
        slope_std_err=stderr,
        reference_slope=minimax_estimation_slope(cfg.dim),
        theorem_slope=guaranteed_estimation_slope(cfg.dim),
    )


def run_manifold_rate_experiment(
    cfg: ExperimentConfig,
    solver: Optional[SolverOptions] = None,
    threads: Union[int, str] = 1,
    grid_points: int = 15,
    grid_decades: float = 4.0,
    graph_options: Optional[GraphOptions] = None,
) -> RateCurve:
    """Rate experiment on a manifold design, tuned with the intrinsic dimension by default."""
    if not cfg.design.is_manifold:
        raise ConfigurationError(f"manifold experiments need a manifold design, got {cfg.design.family.value}")
    return run_rate_experiment(cfg, solver, threads, grid_points, grid_decades, graph_options)


def _slope_document(curve: RateCurve) -> Dict[str, Any]:
    return curve.model_dump(mode="json")


class RateExperiment(Experiment):
    """Estimation rate on full-dimensional designs."""

    kind = ExperimentKind.RATES

    def _grid(self) -> Dict[str, Any]:
        return {
            "grid_points": self._get_config_value("estimator.oracle_grid_points", 15),
            "grid_decades": self._get_config_value("estimator.oracle_grid_decades", 4.0),
            "graph_options": self.graph_options,
        }

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        curve = run_rate_experiment(cfg, self.solver, threads, **self._grid())
        self.logger.info(
            f"Rate curve fitted slope {curve.fitted_slope} (reference {curve.reference_slope:.3f})",
            dim_used=curve.dim_used,
        )
        return ExperimentOutput(
            tables={"curve.csv": (["n", "mean_mse", "stderr"], curve.curve_rows())},
            documents={"slope.json": _slope_document(curve)},
            result=curve,
            summary={"fitted_slope": curve.fitted_slope, "reference_slope": curve.reference_slope},
        )


class ManifoldRateExperiment(RateExperiment):
    """
    Estimation rate on a manifold design. With ``negative_control`` the same
    pipeline is repeated tuned with the ambient dimension; with
    ``ambient_control`` it is repeated on the uniform cube of the ambient
    dimension, where the full-dimensional rate applies.
    """

    kind = ExperimentKind.MANIFOLD

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        curve = run_manifold_rate_experiment(cfg, self.solver, threads, **self._grid())
        output = ExperimentOutput(
            tables={"curve.csv": (["n", "mean_mse", "stderr"], curve.curve_rows())},
            documents={"slope.json": _slope_document(curve)},
            result=curve,
            summary={"fitted_slope": curve.fitted_slope, "reference_slope": curve.reference_slope},
        )
        if self._get_config_value("experiments.manifold.negative_control", True) and cfg.dim != cfg.design.d:
            control_cfg = cfg.model_copy(update={"dim_used": cfg.design.d})
            control = run_rate_experiment(control_cfg, self.solver, threads, **self._grid())
            output.tables["control_curve.csv"] = (["n", "mean_mse", "stderr"], control.curve_rows())
            output.documents["slope.json"]["negative_control"] = _slope_document(control)
            output.summary["control_slope"] = control.fitted_slope
            self.logger.info(
                f"Manifold slope {curve.fitted_slope} vs ambient-dimension control {control.fitted_slope}"
            )
        if self._get_config_value("experiments.manifold.ambient_control", True):
            cube = DesignSpec(family=DesignFamily.UNIFORM_CUBE, d=cfg.design.d, domain=cfg.design.domain)
            ambient_cfg = cfg.model_copy(update={"design": cube, "dim_used": None})
            ambient = run_rate_experiment(ambient_cfg, self.solver, threads, **self._grid())
            output.tables["ambient_curve.csv"] = (["n", "mean_mse", "stderr"], ambient.curve_rows())
            output.documents["slope.json"]["ambient_control"] = _slope_document(ambient)
            output.summary["ambient_slope"] = ambient.fitted_slope
            output.summary["ambient_reference_slope"] = ambient.reference_slope
            self.logger.info(
                f"Manifold slope {curve.fitted_slope} vs uniform-cube d={cube.d} slope {ambient.fitted_slope}"
            )
        return output

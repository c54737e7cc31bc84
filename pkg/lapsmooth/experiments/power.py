"""
Testing-rate experiment: power curves per n and the separation needed for
a target power, whose log-log slope in n is compared with -2/(4+d).
"""

from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from ..config import GraphOptions
from ..core.gof import PowerCurve, critical_epsilon, power_curve
from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput
from .slopes import fit_loglog_slope, minimax_testing_slope

DEFAULT_EPSILONS = np.geomspace(0.02, 3.0, 19)


class CriticalSeparationCurve(BaseModel):
    """Critical separations across n with their fitted slope."""

    target_power: float
    curves: List[PowerCurve]
    critical: List[Optional[float]]
    fitted_slope: Optional[float] = None
    slope_std_err: Optional[float] = None
    reference_slope: float


def run_power_experiment(
    cfg: ExperimentConfig,
    threads: Union[int, str] = 1,
    dense_cap: int = 4000,
    graph_options: Optional[GraphOptions] = None,
) -> CriticalSeparationCurve:
    """Power curve at every n in the grid and the slope of the critical separation."""
    epsilons = cfg.epsilons or DEFAULT_EPSILONS.tolist()
    kernel = cfg.make_kernel()
    curves = [
        power_curve(
            cfg.design,
            cfg.signal,
            n,
            epsilons,
            cfg.reps,
            alpha=cfg.alpha,
            M=cfg.M,
            kernel=kernel,
            C0=cfg.C0,
            calibration=cfg.calibration,
            n_perm=cfg.n_perm,
            seed=cfg.seed,
            threads=threads,
            dense_cap=dense_cap,
            graph_options=graph_options,
        )
        for n in cfg.n_grid
    ]
    critical = [critical_epsilon(curve, cfg.target_power) for curve in curves]

    slope = stderr = None
    reached = [(n, eps) for n, eps in zip(cfg.n_grid, critical) if eps is not None]
    if len(reached) >= 4:
        slope, stderr = fit_loglog_slope([n for n, _ in reached], [eps for _, eps in reached])
    return CriticalSeparationCurve(
        target_power=cfg.target_power,
        curves=curves,
        critical=critical,
        fitted_slope=slope,
        slope_std_err=stderr,
        reference_slope=minimax_testing_slope(cfg.dim),
    )


class PowerExperiment(Experiment):
    """Power curves and critical separation against n."""

    kind = ExperimentKind.POWER

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        rate = run_power_experiment(
            cfg, threads=threads, dense_cap=self.solver.dense_cap, graph_options=self.graph_options
        )
        power_rows = [
            [curve.n, row.epsilon, row.rejection_rate, row.mc_std_err]
            for curve in rate.curves
            for row in curve.rows
        ]
        critical_rows = [[n, eps] for n, eps in zip(cfg.n_grid, rate.critical)]
        document: Dict[str, Any] = {
            "fitted_slope": rate.fitted_slope,
            "slope_std_err": rate.slope_std_err,
            "reference_slope": rate.reference_slope,
            "target_power": rate.target_power,
            "null_rejection_rates": {str(c.n): c.null_rejection_rate for c in rate.curves},
        }
        self.logger.info(
            f"Critical separation slope {rate.fitted_slope} (reference {rate.reference_slope:.3f})"
        )
        return ExperimentOutput(
            tables={
                "power.csv": (["n", "epsilon", "rejection_rate", "mc_std_err"], power_rows),
                "critical.csv": (["n", "epsilon_critical"], critical_rows),
            },
            documents={"slope.json": document},
            result=rate,
            summary={"fitted_slope": rate.fitted_slope, "reference_slope": rate.reference_slope},
        )

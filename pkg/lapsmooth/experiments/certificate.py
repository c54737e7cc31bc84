"""
Bias/variance certificate replications: how often the observed in-sample
error stays below the bias bound plus the variance bound.
"""

from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from ..config import GraphOptions, SolverOptions
from ..core.estimator import bias_variance_certificate, fit, resolve_tuning
from ..core.graph import build_graph
from ..core.solver import full_spectrum
from ..core.synthetic import make_dataset
from ..utils.parallel import ordered_map
from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput


class CertificateRow(BaseModel):
    n: int
    rep: int
    rho: float
    in_sample_mse: float
    bias_bound: float
    variance_bound: float
    coverage_floor: float
    holds: bool


def run_certificate_check(
    cfg: ExperimentConfig,
    solver: SolverOptions,
    threads: Union[int, str] = 1,
    graph_options: Optional[GraphOptions] = None,
) -> List[CertificateRow]:
    """One replicate per (n, rep) with theorem-rule (or fixed) tuning."""
    kernel = cfg.make_kernel()

    def replicate(job) -> CertificateRow:
        n, rep = job
        data = make_dataset(cfg.design, cfg.signal, n, seed=cfg.seed, index=rep, noise=cfg.noise)
        tuning = resolve_tuning(n, cfg.dim, cfg.M, "estimation",
                                rho=cfg.rho if cfg.tuning == "fixed" else None, C0=cfg.C0)
        graph = build_graph(data.points, tuning.r, kernel, options=graph_options)
        result = fit(data.points, data.y, tuning, kernel, graph=graph,
                     f0_at_points=data.f0_at_points, options=solver)
        bounds = bias_variance_certificate(result, data.f0_at_points, full_spectrum(graph, solver.dense_cap))
        return CertificateRow(
            n=n,
            rep=rep,
            rho=tuning.rho,
            in_sample_mse=result.in_sample_mse,
            bias_bound=bounds.bias_bound,
            variance_bound=bounds.variance_bound,
            coverage_floor=bounds.coverage_floor,
            holds=result.in_sample_mse <= bounds.total,
        )

    jobs = [(n, rep) for n in cfg.n_grid for rep in range(cfg.reps)]
    return ordered_map(replicate, jobs, threads=threads)


class CertificateExperiment(Experiment):
    """Coverage of the bias/variance certificate."""

    kind = ExperimentKind.CERTIFICATE

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        rows = run_certificate_check(cfg, self.solver, threads=threads, graph_options=self.graph_options)
        summary: Dict[str, Any] = {}
        for n in cfg.n_grid:
            subset = [row for row in rows if row.n == n]
            summary[str(n)] = {
                "coverage": float(np.mean([row.holds for row in subset])),
                "min_coverage_floor": float(min(row.coverage_floor for row in subset)),
                "mean_mse": float(np.mean([row.in_sample_mse for row in subset])),
                "mean_bound": float(np.mean([row.bias_bound + row.variance_bound for row in subset])),
            }
        self.logger.info(f"Certificate coverage {summary}")
        header = ["n", "rep", "rho", "in_sample_mse", "bias_bound", "variance_bound", "coverage_floor", "holds"]
        table = [[row.n, row.rep, row.rho, row.in_sample_mse, row.bias_bound, row.variance_bound,
                  row.coverage_floor, row.holds] for row in rows]
        return ExperimentOutput(
            tables={"certificate.csv": (header, table)},
            documents={"summary.json": summary},
            result=rows,
            summary=summary,
        )

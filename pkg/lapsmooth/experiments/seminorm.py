"""
Graph Sobolev seminorm check: fᵀLf / (n^2 r^(d+2) |f|^2_{H^1}) stays bounded
across n and concentrates as n grows.
"""

from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from ..config import GraphOptions
from ..core.estimator import connectivity_radius
from ..core.graph import build_graph, graph_diagnostics
from ..core.synthetic import evaluate_signal, sample_design, sobolev_seminorm_oracle
from ..utils.parallel import ordered_map
from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput


class SeminormRow(BaseModel):
    n: int
    rep: int
    r: float
    quadratic_form: float
    ratio: float
    max_degree: float
    degree_bound_holds: Optional[bool] = None


def seminorm_ratio(quadratic_form: float, n: int, r: float, d: int, seminorm: float) -> float:
    """fᵀLf / (n^2 r^(d+2) |f|^2_{H^1}); zero for signals with zero seminorm and form."""
    if seminorm == 0:
        return 0.0 if quadratic_form == 0 else float("inf")
    return quadratic_form / (n * n * r ** (d + 2) * seminorm)


def run_seminorm_check(
    cfg: ExperimentConfig,
    threads: Union[int, str] = 1,
    graph_options: Optional[GraphOptions] = None,
) -> List[SeminormRow]:
    """One row per (n, replicate) for ``cfg.signal`` on ``cfg.design``."""
    d = cfg.design.d
    kernel = cfg.make_kernel(d)
    seminorm = sobolev_seminorm_oracle(cfg.signal, cfg.design)

    def replicate(job) -> SeminormRow:
        n, rep = job
        points = sample_design(cfg.design, n, seed=cfg.seed, index=rep)
        r = connectivity_radius(n, d, cfg.C0)
        graph = build_graph(points, r, kernel, options=graph_options)
        diagnostics = graph_diagnostics(
            graph,
            p_max=cfg.p_max,
            functions={"f0": evaluate_signal(cfg.signal, points)},
        )
        form = diagnostics.seminorm_samples[0][1]
        return SeminormRow(
            n=n,
            rep=rep,
            r=r,
            quadratic_form=form,
            ratio=seminorm_ratio(form, n, r, d, seminorm),
            max_degree=diagnostics.max_degree,
            degree_bound_holds=diagnostics.degree_bound_holds,
        )

    jobs = [(n, rep) for n in cfg.n_grid for rep in range(cfg.reps)]
    return ordered_map(replicate, jobs, threads=threads)


def summarize_seminorm(rows: List[SeminormRow]) -> Dict[str, Any]:
    """Per-n spread of the ratio across seeds."""
    per_n: Dict[str, Any] = {}
    for n in sorted({row.n for row in rows}):
        ratios = np.array([row.ratio for row in rows if row.n == n])
        positive = ratios[ratios > 0]
        per_n[str(n)] = {
            "mean": float(ratios.mean()),
            "std": float(ratios.std(ddof=1)) if ratios.size > 1 else 0.0,
            "min": float(ratios.min()),
            "max": float(ratios.max()),
            "max_over_min": float(positive.max() / positive.min()) if positive.size else None,
        }
    stds = [entry["std"] for entry in per_n.values()]
    return {
        "per_n": per_n,
        "overall_max": max(row.ratio for row in rows),
        "dispersion_shrinks": all(b <= a for a, b in zip(stds, stds[1:])),
        "degree_bound_holds": all(row.degree_bound_holds is not False for row in rows),
    }


class SeminormExperiment(Experiment):
    """Boundedness and concentration of the graph seminorm."""

    kind = ExperimentKind.SEMINORM

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        if cfg.p_max is None:
            cfg = cfg.model_copy(update={"p_max": self._get_config_value("experiments.seminorm.p_max")})
        rows = run_seminorm_check(cfg, threads=threads, graph_options=self.graph_options)
        summary = summarize_seminorm(rows)
        self.logger.info(
            f"Seminorm ratio at most {summary['overall_max']:.4g}",
            dispersion_shrinks=summary["dispersion_shrinks"],
        )
        header = ["n", "rep", "r", "quadratic_form", "ratio", "max_degree", "degree_bound_holds"]
        table = [[row.n, row.rep, row.r, row.quadratic_form, row.ratio, row.max_degree, row.degree_bound_holds]
                 for row in rows]
        return ExperimentOutput(
            tables={"seminorm.csv": (header, table)},
            documents={"summary.json": summary},
            result=rows,
            summary=summary,
        )

"""
Spectral envelope check.

On uniform designs the graph eigenvalues track
A(k) = min(n r^(d+2) k^(2/d), n r^d) up to constants, and below saturation
(k up to about r^(-d)) they grow like k^(2/d).
"""

from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from ..config import GraphOptions
from ..core.estimator import connectivity_radius
from ..core.graph import build_graph
from ..core.kernels import KernelSpec
from ..core.solver import full_spectrum
from ..core.synthetic import DesignFamily, DesignSpec, sample_design
from ..exceptions import CapacityError
from ..utils.parallel import ordered_map
from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput
from .slopes import fit_loglog_slope


class EnvelopeRow(BaseModel):
    d: int
    n: int
    rep: int
    r: float
    connected: bool
    lambda_1: float
    ratio_min: float
    ratio_max: float
    k_lo: int
    k_hi: int
    slope: Optional[float]
    slope_std_err: Optional[float]

    @property
    def ratio_spread(self) -> float:
        return self.ratio_max / self.ratio_min if self.ratio_min > 0 else float("inf")


def envelope(n: int, r: float, d: int, k: np.ndarray) -> np.ndarray:
    """A(k) = min(n r^(d+2) k^(2/d), n r^d)."""
    k = np.asarray(k, dtype=np.float64)
    return np.minimum(n * r ** (d + 2) * k ** (2.0 / d), n * r ** d)


def describe_slope_window(window: Tuple[float, float]) -> str:
    """Slope window as reported in run summaries."""
    return f"k in [{window[0]:g}, {window[1]:g}] x min(n, floor(r^-d))"


def slope_window(n: int, r: float, d: int, window: Tuple[float, float]) -> Tuple[int, int]:
    """Index range [lo, hi] as fractions of K = min(n, floor(r^(-d))), clipped to [2, n]."""
    K = min(n, int(np.floor(r ** (-d))))
    lo = max(2, int(np.ceil(window[0] * K)))
    hi = min(n, int(np.floor(window[1] * K)))
    return lo, hi


def envelope_row(
    d: int,
    n: int,
    rep: int,
    seed: int,
    C0: float,
    kernel_family: str,
    window: Tuple[float, float],
    dense_cap: int,
    graph_options: Optional[GraphOptions] = None,
) -> EnvelopeRow:
    design = DesignSpec(family=DesignFamily.UNIFORM_CUBE, d=d, domain="unit")
    points = sample_design(design, n, seed=seed, index=rep)
    r = connectivity_radius(n, d, C0)
    graph = build_graph(points, r, KernelSpec(kernel_family, dimension=d), options=graph_options)
    eigenvalues = full_spectrum(graph, dense_cap=dense_cap).eigenvalues

    k = np.arange(2, n + 1)
    ratios = eigenvalues[1:] / envelope(n, r, d, k)
    lo, hi = slope_window(n, r, d, window)
    slope = stderr = None
    window_values = eigenvalues[lo - 1:hi]
    if hi - lo + 1 >= 4 and np.all(window_values > 0):
        slope, stderr = fit_loglog_slope(np.arange(lo, hi + 1), window_values)
    return EnvelopeRow(
        d=d,
        n=n,
        rep=rep,
        r=r,
        connected=graph.connected,
        lambda_1=float(eigenvalues[0]),
        ratio_min=float(ratios.min()),
        ratio_max=float(ratios.max()),
        k_lo=lo,
        k_hi=hi,
        slope=slope,
        slope_std_err=stderr,
    )


def run_spectral_envelope(
    cfg: ExperimentConfig,
    dense_cap: int = 4000,
    threads: Union[int, str] = 1,
    graph_options: Optional[GraphOptions] = None,
) -> List[EnvelopeRow]:
    """
    One row per (d, n, replicate): eigenvalue ratio range against the
    envelope and the log-log slope of lambda_k over the pre-saturation window.
    """
    too_big = [n for n in cfg.n_grid if n > dense_cap]
    if too_big:
        raise CapacityError(f"Spectral envelope needs n <= dense cap {dense_cap}, got {too_big}")
    jobs = [(d, n, rep) for d in cfg.d_list for n in cfg.n_grid for rep in range(cfg.reps)]
    return ordered_map(
        lambda job: envelope_row(
            job[0], job[1], job[2], cfg.seed, cfg.C0, cfg.kernel, cfg.k_window, dense_cap, graph_options
        ),
        jobs,
        threads=threads,
    )


def summarize_envelope(rows: List[EnvelopeRow]) -> Dict[str, Any]:
    """Per-dimension pooled ratio spread and slope statistics."""
    summary: Dict[str, Any] = {}
    for d in sorted({row.d for row in rows}):
        subset = [row for row in rows if row.d == d]
        slopes = [row.slope for row in subset if row.slope is not None]
        ratio_min = min(row.ratio_min for row in subset)
        ratio_max = max(row.ratio_max for row in subset)
        summary[str(d)] = {
            "weyl_slope": 2.0 / d,
            "mean_slope": float(np.mean(slopes)) if slopes else None,
            "min_slope": float(np.min(slopes)) if slopes else None,
            "max_slope": float(np.max(slopes)) if slopes else None,
            "ratio_min": ratio_min,
            "ratio_max": ratio_max,
            "ratio_spread": ratio_max / ratio_min if ratio_min > 0 else None,
            "max_abs_lambda_1": max(abs(row.lambda_1) for row in subset),
        }
    return summary


class SpectralEnvelopeExperiment(Experiment):
    """Eigenvalue growth against the envelope A(k)."""

    kind = ExperimentKind.SPECTRAL

    def execute(self, cfg: ExperimentConfig, threads: Union[int, str] = 1) -> ExperimentOutput:
        rows = run_spectral_envelope(
            cfg, dense_cap=self.solver.dense_cap, threads=threads, graph_options=self.graph_options
        )
        summary = summarize_envelope(rows)
        summary["slope_window"] = describe_slope_window(cfg.k_window)
        self.logger.info(f"Eigenvalue slopes fitted over {summary['slope_window']}", d_list=cfg.d_list)
        header = ["d", "n", "rep", "r", "connected", "lambda_1", "ratio_min", "ratio_max", "k_lo", "k_hi", "slope", "slope_std_err"]
        table = [
            [row.d, row.n, row.rep, row.r, row.connected, row.lambda_1, row.ratio_min,
             row.ratio_max, row.k_lo, row.k_hi, row.slope, row.slope_std_err]
            for row in rows
        ]
        return ExperimentOutput(
            tables={"envelope.csv": (header, table)},
            documents={"summary.json": summary},
            result=rows,
            summary=summary,
        )

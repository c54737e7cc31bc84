"""
Monte Carlo checks of the sampler and of graph connectivity at the
connectivity radius. Run with ``pytest -m slow``.
"""

import numpy as np
import pytest
from scipy import stats

from lapsmooth.core.estimator import connectivity_radius
from lapsmooth.core.graph import build_graph, graph_diagnostics
from lapsmooth.core.kernels import KernelSpec
from lapsmooth.core.synthetic import DesignSpec, sample_design

pytestmark = pytest.mark.slow

SEEDS = range(100)


def test_graph_at_connectivity_radius_is_connected():
    n = 500
    r = connectivity_radius(n, 2, C0=2.0)
    kernel = KernelSpec("uniform", dimension=2)
    design = DesignSpec(d=2)

    connected = sum(
        graph_diagnostics(build_graph(sample_design(design, n, seed=seed), r, kernel)).connected
        for seed in SEEDS
    )

    assert r == pytest.approx(2.0 * np.sqrt(np.log(n) / n))
    assert connected >= 95


@pytest.mark.parametrize("d", [1, 3])
def test_uniform_design_passes_kolmogorov_smirnov(d):
    n = 1000
    design = DesignSpec(d=d)
    critical = stats.kstwo.ppf(0.99, n)

    passed = sum(
        stats.kstest(sample_design(design, n, seed=seed).points[:, 0], stats.uniform.cdf).statistic < critical
        for seed in SEEDS
    )

    assert passed >= 95

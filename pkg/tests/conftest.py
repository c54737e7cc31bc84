import numpy as np
import pytest
from pathlib import Path

from lapsmooth.config import load_config
from lapsmooth.core.graph import NeighborhoodGraph, build_graph
from lapsmooth.core.kernels import KernelSpec

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def three_point_files():
    return str(FIXTURES / "three_points.csv"), str(FIXTURES / "three_responses.csv")


@pytest.fixture
def test_config_path():
    return str(FIXTURES / "test_config.yaml")


@pytest.fixture
def test_config(test_config_path):
    return load_config(test_config_path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def uniform_kernel_2d():
    return KernelSpec("uniform", dimension=2)


@pytest.fixture
def unit_square_graph(rng, uniform_kernel_2d):
    """Connected-ish graph on 120 uniform points in [0, 1]^2."""
    points = rng.random((120, 2))
    return build_graph(points, 0.25, uniform_kernel_2d)


@pytest.fixture
def random_weight_graph(rng):
    """Factory for graphs with symmetric random weights and zero diagonal."""

    def make(n, density=0.3):
        upper = np.triu(rng.random((n, n)) * (rng.random((n, n)) < density), k=1)
        return NeighborhoodGraph.from_weights(upper + upper.T)

    return make

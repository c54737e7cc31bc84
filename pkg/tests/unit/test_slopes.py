import numpy as np
import pytest
from scipy import stats

from lapsmooth.exceptions import InputError
from lapsmooth.experiments.slopes import (
    fit_loglog_slope,
    guaranteed_estimation_slope,
    minimax_estimation_slope,
    minimax_testing_slope,
)


def test_exact_power_law():
    n = np.array([1000, 2000, 4000, 8000, 16000])

    slope, stderr = fit_loglog_slope(n, 3.0 * n ** -0.5)

    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-10)


def test_constant_curve_has_zero_slope():
    assert fit_loglog_slope([1, 2, 3, 4], [0.5] * 4) == (0.0, 0.0)


def test_slope_input_checks():
    with pytest.raises(InputError):
        fit_loglog_slope([1, 2, 3], [1, 2, 3])
    with pytest.raises(InputError):
        fit_loglog_slope([1, 2, 3, 4], [1, 0, 3, 4])
    with pytest.raises(InputError):
        fit_loglog_slope([1, 2, 3, 4], [1, 2, 3])


def test_slope_confidence_interval_coverage():
    rng = np.random.default_rng(2024)
    x = np.geomspace(100, 10000, 40)
    t = stats.t.ppf(0.975, df=38)
    covered = 0
    for _ in range(1000):
        y = 2.0 * x ** -0.4 * np.exp(0.1 * rng.standard_normal(40))
        slope, stderr = fit_loglog_slope(x, y)
        covered += abs(slope + 0.4) <= t * stderr

    assert covered / 1000 >= 0.9


def test_reference_exponents():
    assert minimax_estimation_slope(1) == pytest.approx(-2.0 / 3.0)
    assert minimax_estimation_slope(2) == pytest.approx(-0.5)
    assert minimax_testing_slope(1) == pytest.approx(-0.4)
    assert guaranteed_estimation_slope(2) == minimax_estimation_slope(2)
    assert guaranteed_estimation_slope(4) == pytest.approx(-1.0 / 3.0)
    assert guaranteed_estimation_slope(5) == pytest.approx(-4.0 / 15.0)

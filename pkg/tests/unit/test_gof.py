import numpy as np
import pytest

from lapsmooth.core.estimator import fit, resolve_tuning
from lapsmooth.core.gof import (
    Calibration,
    PowerCurve,
    PowerRow,
    SmoothingStatistic,
    critical_epsilon,
    gof_test_permutation,
    gof_test_spectral,
    low_smoothness_test,
    permutation_p_value,
    power_curve,
    spectral_threshold,
    test_statistic as statistic_of,
)
from lapsmooth.core.graph import build_graph, dense_laplacian
from lapsmooth.core.kernels import KernelSpec
from lapsmooth.core.solver import full_spectrum, partial_spectrum
from lapsmooth.core.synthetic import DesignSpec, SignalSpec
from lapsmooth.exceptions import CapacityError, InputError


@pytest.fixture
def square_points(rng):
    return rng.random((80, 2))


def test_statistic_is_mean_square():
    assert statistic_of(np.array([1.0, -2.0, 3.0, 0.0])) == pytest.approx(14.0 / 4.0)


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.2])
def test_threshold_without_penalty(alpha, random_weight_graph):
    g = random_weight_graph(40)
    spectrum = full_spectrum(g)

    expected = 1.0 + np.sqrt(2.0 / alpha) / np.sqrt(40)

    assert spectral_threshold(spectrum, 0.0, alpha) == pytest.approx(expected, abs=1e-12)


def test_threshold_is_continuous_at_zero_penalty(random_weight_graph):
    spectrum = full_spectrum(random_weight_graph(40))

    assert spectral_threshold(spectrum, 1e-12, 0.05) == pytest.approx(
        spectral_threshold(spectrum, 0.0, 0.05), abs=1e-9
    )


def test_threshold_matches_dense_evaluation(random_weight_graph):
    g = random_weight_graph(30)
    eigenvalues = np.linalg.eigvalsh(dense_laplacian(g))
    s = 1.0 / (0.1 * eigenvalues + 1.0)

    expected = np.sum(s ** 2) / 30 + np.sqrt(2.0 / 0.05 * np.sum(s ** 4)) / 30

    assert spectral_threshold(full_spectrum(g), 0.1, 0.05) == pytest.approx(expected, abs=1e-10)


def test_threshold_decreases_with_penalty(unit_square_graph):
    spectrum = full_spectrum(unit_square_graph)
    thresholds = [spectral_threshold(spectrum, rho, 0.05) for rho in (0.0, 0.1, 1.0, 10.0)]

    assert thresholds == sorted(thresholds, reverse=True)


def test_threshold_needs_full_spectrum(unit_square_graph):
    with pytest.raises(CapacityError):
        spectral_threshold(partial_spectrum(unit_square_graph, 4), 0.1, 0.05)


def test_threshold_rejects_bad_alpha(random_weight_graph):
    spectrum = full_spectrum(random_weight_graph(10))
    with pytest.raises(InputError):
        spectral_threshold(spectrum, 0.1, 1.0)


@pytest.mark.parametrize("rho", [-0.5, -1e-9, float("nan")])
def test_threshold_rejects_bad_penalty(rho, random_weight_graph):
    spectrum = full_spectrum(random_weight_graph(10))
    with pytest.raises(InputError):
        spectral_threshold(spectrum, rho, 0.05)


def test_spectral_test_on_three_points(three_point_files):
    points = np.loadtxt(three_point_files[0], delimiter=",").reshape(-1, 1)
    y = np.loadtxt(three_point_files[1], delimiter=",")
    tuning = resolve_tuning(3, 1, r=1.0, rho=0.0)

    result = gof_test_spectral(points, y, tuning, KernelSpec("uniform", dimension=1), alpha=0.05)

    assert result.statistic == pytest.approx(11.3125 / 3.0)
    assert result.threshold == pytest.approx(1.0 + np.sqrt(2.0 / 0.15))
    assert not result.reject
    assert result.calibration is Calibration.SPECTRAL


def test_spectral_test_statistic_matches_fit(square_points, uniform_kernel_2d, rng):
    y = rng.standard_normal(80)
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5, task="testing")

    result = gof_test_spectral(square_points, y, tuning, uniform_kernel_2d)

    assert result.statistic == pytest.approx(statistic_of(fit(square_points, y, tuning, uniform_kernel_2d)))
    assert result.reject == (result.statistic > result.threshold)


def test_spectral_test_respects_dense_cap(square_points, uniform_kernel_2d, rng):
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5)

    with pytest.raises(CapacityError):
        gof_test_spectral(square_points, rng.standard_normal(80), tuning, uniform_kernel_2d, dense_cap=50)


def test_null_values_are_subtracted(square_points, uniform_kernel_2d, rng):
    f_star = square_points[:, 0]
    noise = rng.standard_normal(80)
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5)

    shifted = gof_test_spectral(square_points, noise + f_star, tuning, uniform_kernel_2d, null_values=f_star)
    plain = gof_test_spectral(square_points, noise, tuning, uniform_kernel_2d)

    assert shifted.statistic == pytest.approx(plain.statistic, rel=1e-9)


def test_p_value_counts_ties():
    assert permutation_p_value(2.0, [2.0] * 99) == 1.0
    assert permutation_p_value(2.0, [1.0] * 99) == pytest.approx(0.01)
    assert permutation_p_value(2.0, [3.0, 1.0, 2.0, 0.5]) == pytest.approx(3.0 / 5.0)


def test_permutation_test_of_constant_responses(square_points, uniform_kernel_2d):
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5)

    result = gof_test_permutation(square_points, np.full(80, 2.0), tuning, uniform_kernel_2d, n_perm=99)

    assert result.p_value == 1.0
    assert not result.reject


def test_permutation_test_detects_smooth_signal(square_points, uniform_kernel_2d, rng):
    y = 5.0 * (square_points[:, 0] - 0.5) + 0.1 * rng.standard_normal(80)
    tuning = resolve_tuning(80, 2, r=0.3, rho=1.0)

    result = gof_test_permutation(square_points, y, tuning, uniform_kernel_2d, n_perm=99, seed=3)

    assert result.p_value == pytest.approx(1.0 / 100.0)
    assert result.reject
    assert result.calibration is Calibration.PERMUTATION
    assert result.n_perm == 99


def test_permutation_p_value_does_not_depend_on_threads(square_points, uniform_kernel_2d, rng):
    y = rng.standard_normal(80) + 0.3 * square_points[:, 1]
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5)

    results = [
        gof_test_permutation(square_points, y, tuning, uniform_kernel_2d, n_perm=299, seed=11, threads=threads)
        for threads in (1, 2)
    ]

    assert results[0].p_value == results[1].p_value
    assert results[0].statistic == results[1].statistic


def test_permutation_test_needs_enough_permutations(square_points, uniform_kernel_2d, rng):
    tuning = resolve_tuning(80, 2, r=0.3, rho=0.5)

    with pytest.raises(InputError):
        gof_test_permutation(square_points, rng.standard_normal(80), tuning, uniform_kernel_2d, n_perm=50)


def test_iterative_statistic_matches_eigenvector_statistic(unit_square_graph, rng):
    Y = rng.standard_normal((unit_square_graph.n, 4))

    spectral = SmoothingStatistic(unit_square_graph, 0.7, method="spectral")
    iterative = SmoothingStatistic(unit_square_graph, 0.7, method="iterative")

    assert np.allclose(spectral(Y), iterative(Y), rtol=1e-8)
    assert SmoothingStatistic(unit_square_graph, 0.7, dense_cap=50).method == "iterative"


def test_low_smoothness_test(three_point_files):
    y = np.loadtxt(three_point_files[1], delimiter=",")

    result = low_smoothness_test(y, alpha=0.05)

    assert result.statistic == pytest.approx(11.3125 / 3.0)
    assert result.threshold == pytest.approx(1.0 + np.sqrt(2.0 / 0.15))
    assert result.rho == 0.0
    assert result.r is None


def test_low_smoothness_test_rejects_large_shift():
    y = np.full(100, 3.0)

    assert low_smoothness_test(y).reject
    assert not low_smoothness_test(y, null_values=np.full(100, 3.0)).reject


def test_small_power_curve():
    design = DesignSpec(d=1)
    signal = SignalSpec(family="cosine-product", d=1)

    curve = power_curve(design, signal, 60, [0.0, 0.5, 5.0], reps=10, seed=2)

    assert [row.epsilon for row in curve.rows] == [0.0, 0.5, 5.0]
    assert curve.null_rejection_rate == curve.rows[0].rejection_rate
    assert curve.rows[-1].rejection_rate == 1.0
    assert curve.rows[-1].mc_std_err == 0.0


def test_power_curve_is_thread_invariant():
    design = DesignSpec(d=1)
    signal = SignalSpec(family="cosine-product", d=1)

    serial = power_curve(design, signal, 50, [0.3, 1.0], reps=6, seed=5, threads=1)
    threaded = power_curve(design, signal, 50, [0.3, 1.0], reps=6, seed=5, threads=3)

    assert serial == threaded
    assert [row.epsilon for row in serial.rows] == [0.3, 1.0]


def test_power_curve_with_permutation_calibration():
    curve = power_curve(
        DesignSpec(d=1), SignalSpec(d=1), 40, [4.0], reps=3, calibration="permutation", n_perm=99, seed=1
    )

    assert curve.calibration is Calibration.PERMUTATION
    assert curve.rows[0].rejection_rate == 1.0


def _curve(rows):
    return PowerCurve(
        n=100,
        reps=10,
        alpha=0.05,
        calibration="spectral",
        rows=[PowerRow(epsilon=e, rejection_rate=p, mc_std_err=0.0) for e, p in rows],
        null_rejection_rate=0.05,
    )


def test_critical_epsilon_interpolates_in_log_scale():
    curve = _curve([(0.1, 0.2), (0.2, 0.6), (0.4, 1.0)])

    assert critical_epsilon(curve, 0.8) == pytest.approx(np.sqrt(0.08))


def test_critical_epsilon_edge_cases():
    assert critical_epsilon(_curve([(0.1, 0.1), (0.2, 0.5)]), 0.8) is None
    assert critical_epsilon(_curve([(0.3, 0.9), (0.6, 1.0)]), 0.8) == 0.3

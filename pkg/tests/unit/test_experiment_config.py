import pytest

from lapsmooth.exceptions import ConfigurationError
from lapsmooth.experiments.base_experiment import (
    ExperimentKind,
    ExperimentOutput,
    build_experiment_config,
    parse_n_grid,
)


def test_log_spaced_grid():
    assert parse_n_grid("1000:10000:log5") == [1000, 1778, 3162, 5623, 10000]


def test_linear_and_listed_grids():
    assert parse_n_grid("1:10:lin4") == [1, 4, 7, 10]
    assert parse_n_grid("250, 500,1000") == [250, 500, 1000]


@pytest.mark.parametrize("text", ["1000:10000:cubic5", "a,b", "1:2"])
def test_bad_grids(text):
    with pytest.raises(ConfigurationError):
        parse_n_grid(text)


def test_configuration_layers(test_config):
    cfg = build_experiment_config("spectral", test_config, {"d_list": [1]})

    assert cfg.kind is ExperimentKind.SPECTRAL
    assert cfg.reps == 3
    assert cfg.k_window == (0.2, 0.6)
    assert cfg.d_list == [1]


def test_overrides_merge_into_design(test_config):
    config = dict(test_config)
    config["experiments"] = dict(test_config["experiments"], rates={"design": {"d": 2, "domain": "symmetric"}})

    cfg = build_experiment_config("rates", config, {"design": {"d": 1}, "rho": None})

    assert cfg.design.d == 1
    assert cfg.design.domain == "symmetric"
    assert cfg.rho is None


def test_calibration_alias(test_config):
    cfg = build_experiment_config("power", test_config, {"calibration": "perm"})

    assert cfg.calibration == "permutation"


def test_manifold_design_sets_dimension(test_config):
    cfg = build_experiment_config("manifold", test_config, {"design": {"family": "circle", "d": 3}})

    assert cfg.dim == 1
    assert cfg.make_kernel().dimension == 1


@pytest.mark.parametrize(
    "overrides",
    [
        {"reps": 2},
        {"tuning": "guess"},
        {"tuning": "fixed"},
        {"n_grid": [100, 200]},
        {"n_grid": [300, 200, 400, 500]},
        {"calibration": "bootstrap"},
        {"k_window": [0.6, 0.2]},
    ],
)
def test_invalid_rate_settings(test_config, overrides):
    with pytest.raises(ConfigurationError):
        build_experiment_config("rates", test_config, overrides)


def test_short_grid_is_fine_without_slope(test_config):
    cfg = build_experiment_config("variance-sums", test_config, {"n_grid": [1000]})

    assert cfg.n_grid == [1000]


def test_output_writes_tables_and_documents(tmp_path):
    output = ExperimentOutput(
        tables={"curve.csv": (["n", "value"], [[10, 0.5]])},
        documents={"slope.json": {"slope": -0.5}},
    )

    written = output.write(tmp_path)

    assert sorted(path.name for path in written) == ["curve.csv", "slope.json"]
    assert (tmp_path / "curve.csv").read_text() == "n,value\n10,0.5\n"

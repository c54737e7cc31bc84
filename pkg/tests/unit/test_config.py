import pytest

from lapsmooth.config import (
    DEFAULT_CONFIG,
    deep_merge,
    get_config_value,
    graph_options,
    load_config,
    solver_options,
)
from lapsmooth.exceptions import ConfigurationError


def test_defaults_without_file():
    config = load_config()

    assert config == DEFAULT_CONFIG
    assert config is not DEFAULT_CONFIG


def test_file_values_override_defaults(test_config):
    assert get_config_value(test_config, "solver.dense_cap") == 500
    assert get_config_value(test_config, "solver.tol") == 1e-10
    assert get_config_value(test_config, "experiments.reps") == 3
    assert get_config_value(test_config, "experiments.spectral.k_window") == [0.2, 0.6]


def test_missing_keys_fall_back_to_default(test_config):
    assert get_config_value(test_config, "solver.nonexistent", "fallback") == "fallback"
    assert get_config_value(test_config, "solver.tol.deeper") is None


def test_deep_merge_keeps_untouched_keys():
    merged = deep_merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"b": 10}})

    assert merged == {"a": {"b": 10, "c": 2}, "d": 3}


def test_missing_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.yaml")


def test_invalid_yaml_is_a_configuration_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("solver: [unclosed\n")

    with pytest.raises(ConfigurationError):
        load_config(path)


def test_top_level_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")

    with pytest.raises(ConfigurationError):
        load_config(path)


def test_typed_sections(test_config):
    assert solver_options(test_config).dense_cap == 500
    assert solver_options(test_config).max_iter == 2000
    assert graph_options(test_config).kernel == "uniform"


def test_invalid_typed_section():
    with pytest.raises(ConfigurationError):
        solver_options({"solver": {"tol": -1.0}})

import json

import numpy as np
import pytest

from lapsmooth import __version__
from lapsmooth.cli import dispatch
from lapsmooth.utils.io import content_hash, read_json

pytestmark = pytest.mark.integration


def run(capsys, *args):
    code = dispatch(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def error_record(err):
    """The one JSON error line the CLI writes to stderr."""
    for line in err.splitlines():
        try:
            record = json.loads(line)
        except ValueError:
            continue
        if isinstance(record, dict) and "exit_code" in record:
            return record
    raise AssertionError(f"no error record in stderr: {err!r}")


def read_csv_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_help_exits_cleanly(capsys):
    code, out, _ = run(capsys, "--help")

    assert code == 0
    assert "experiment" in out


def test_version(capsys):
    code, out, _ = run(capsys, "--version")

    assert code == 0
    assert __version__ in out


def test_missing_required_option_is_a_usage_error(capsys, three_point_files, tmp_path):
    code, _, err = run(capsys, "fit", "--response", three_point_files[1], "--out", str(tmp_path / "f.csv"))

    assert code == 2
    record = error_record(err)
    assert record["exit_code"] == 2
    assert "--data" in record["message"]


def test_unknown_flag_is_a_usage_error(capsys):
    code, _, err = run(capsys, "eigs", "--bogus")

    assert code == 2
    assert error_record(err)["exit_code"] == 2


def test_bad_numeric_flag(capsys, three_point_files, tmp_path):
    points, responses = three_point_files
    code, _, err = run(capsys, "fit", "--data", points, "--response", responses, "--rho", "lots",
                       "--out", str(tmp_path / "f.csv"))

    assert code == 2
    assert "--rho" in error_record(err)["message"]


def test_zero_penalty_fit_returns_responses(capsys, three_point_files, tmp_path):
    points, responses = three_point_files
    out = tmp_path / "fit" / "f_hat.csv"

    code, _, _ = run(capsys, "fit", "--data", points, "--response", responses, "--rho", "0", "--r", "1.0",
                     "--out", str(out))

    assert code == 0
    assert out.read_text().splitlines() == ["index,f_hat", "0,1.5", "1,-0.25", "2,3.0"]
    manifest = read_json(str(out.parent / "manifest.json"))
    assert manifest["command"] == "fit"
    assert manifest["outputs"]["f_hat.csv"] == content_hash(str(out))


def test_mismatched_response_length(capsys, three_point_files, tmp_path):
    responses = tmp_path / "two.csv"
    responses.write_text("1.0\n2.0\n")

    code, _, err = run(capsys, "fit", "--data", three_point_files[0], "--response", str(responses),
                       "--out", str(tmp_path / "f.csv"))

    assert code == 2
    assert error_record(err)["error"] == "InputError"


def test_generate_and_fit_are_reproducible(capsys, test_config_path, tmp_path):
    outputs = []
    for attempt in ("a", "b"):
        data_dir = tmp_path / attempt
        code, _, _ = run(capsys, "--seed", "5", "--config", test_config_path, "gen", "--n", "120", "--d", "2",
                         "--out", str(data_dir))
        assert code == 0
        code, _, _ = run(capsys, "--config", test_config_path, "fit", "--data", str(data_dir / "points.csv"),
                         "--response", str(data_dir / "y.csv"), "--out", str(data_dir / "fit" / "f_hat.csv"))
        assert code == 0
        outputs.append(data_dir)

    for name in ("points.csv", "y.csv", "f0.csv", "fit/f_hat.csv"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()
    points = np.loadtxt(outputs[0] / "points.csv", delimiter=",")
    assert points.shape == (120, 2)


def test_generate_manifold_design(capsys, tmp_path):
    code, _, _ = run(capsys, "gen", "--n", "50", "--design", "circle", "--d", "3", "--no-noise",
                     "--out", str(tmp_path))

    assert code == 0
    design = read_json(str(tmp_path / "design.json"))
    assert design["m"] == 1
    y = np.loadtxt(tmp_path / "y.csv")
    f0 = np.loadtxt(tmp_path / "f0.csv")
    assert np.array_equal(y, f0)


def test_eigenvalues_of_three_points(capsys, three_point_files, tmp_path):
    out = tmp_path / "eigs.csv"

    code, _, _ = run(capsys, "eigs", "--data", three_point_files[0], "--r", "1.0", "--out", str(out))

    header, rows = read_csv_rows(out)
    assert code == 0
    assert header == ["k", "lambda"]
    assert [row[0] for row in rows] == ["1", "2", "3"]
    assert np.allclose([float(row[1]) for row in rows], [0.0, 0.0, 1.0], atol=1e-12)


def test_partial_eigenvalues(capsys, tmp_path):
    rng = np.random.default_rng(4)
    data = tmp_path / "points.csv"
    np.savetxt(data, rng.random((150, 2)), delimiter=",")
    full, partial = tmp_path / "full.csv", tmp_path / "partial.csv"

    assert run(capsys, "eigs", "--data", str(data), "--r", "0.3", "--k", "4", "--out", str(full))[0] == 0
    assert run(capsys, "eigs", "--data", str(data), "--r", "0.3", "--mode", "partial", "--k", "4",
               "--out", str(partial))[0] == 0

    full_values = np.loadtxt(full, delimiter=",", skiprows=1)[:, 1]
    partial_values = np.loadtxt(partial, delimiter=",", skiprows=1)[:, 1]
    assert np.allclose(full_values, partial_values, atol=1e-6)


def test_partial_mode_needs_k(capsys, three_point_files, tmp_path):
    code, _, err = run(capsys, "eigs", "--data", three_point_files[0], "--mode", "partial",
                       "--out", str(tmp_path / "e.csv"))

    assert code == 2
    assert "--k" in error_record(err)["message"]


def test_full_spectrum_above_cap_is_a_capacity_error(capsys, test_config_path, tmp_path):
    data = tmp_path / "points.csv"
    np.savetxt(data, np.random.default_rng(0).random((600, 1)), delimiter=",")

    code, _, err = run(capsys, "--config", test_config_path, "eigs", "--data", str(data),
                       "--out", str(tmp_path / "e.csv"))

    assert code == 4
    assert error_record(err)["error"] == "CapacityError"


def test_spectral_test_on_fixture(capsys, three_point_files, tmp_path):
    points, responses = three_point_files
    out = tmp_path / "result.json"

    code, _, _ = run(capsys, "test", "--data", points, "--response", responses, "--calibration", "spectral",
                     "--rho", "0", "--r", "1.0", "--out", str(out))

    result = read_json(str(out))
    assert code == 0
    assert result["statistic"] == pytest.approx(11.3125 / 3.0)
    assert result["threshold"] == pytest.approx(1.0 + np.sqrt(2.0 / 0.15))
    assert result["reject"] is False
    assert result["calibration"] == "spectral"


def test_permutation_test_on_generated_data(capsys, test_config_path, tmp_path):
    data_dir = tmp_path / "data"
    assert run(capsys, "--seed", "2", "gen", "--n", "100", "--d", "2", "--amplitude", "3.0",
               "--out", str(data_dir))[0] == 0
    out = tmp_path / "result.json"

    code, _, _ = run(capsys, "--seed", "2", "--config", test_config_path, "test",
                     "--data", str(data_dir / "points.csv"), "--response", str(data_dir / "y.csv"),
                     "--calibration", "perm", "--out", str(out))

    result = read_json(str(out))
    assert code == 0
    assert result["calibration"] == "permutation"
    assert result["n_perm"] == 99
    assert result["p_value"] == pytest.approx(0.01)
    assert result["reject"] is True


def test_null_hypothesis_file(capsys, three_point_files, tmp_path):
    points, responses = three_point_files
    out = tmp_path / "result.json"

    code, _, _ = run(capsys, "test", "--data", points, "--response", responses, "--null", responses,
                     "--calibration", "spectral", "--rho", "0", "--r", "1.0", "--out", str(out))

    assert code == 0
    assert read_json(str(out))["statistic"] == 0.0


def test_variance_sum_experiment(capsys, test_config_path, tmp_path):
    code, _, _ = run(capsys, "--config", test_config_path, "experiment", "variance-sums",
                     "--d-list", "1,2", "--n-grid", "1000", "--out", str(tmp_path))

    summary = read_json(str(tmp_path / "summary.json"))
    manifest = read_json(str(tmp_path / "manifest.json"))
    assert code == 0
    assert summary["all_hold"] is True
    assert summary["checked"] > 0
    assert manifest["kind"] == "variance-sums"
    assert set(manifest["outputs"]) == {"summary.json", "variance_sums.csv"}


def test_noiseless_unpenalized_rates_have_zero_error(capsys, test_config_path, tmp_path):
    code, _, _ = run(capsys, "--config", test_config_path, "experiment", "rates", "--d", "1",
                     "--n-grid", "100,200,400,800", "--tuning", "fixed", "--rho", "0", "--no-noise",
                     "--out", str(tmp_path))

    header, rows = read_csv_rows(tmp_path / "curve.csv")
    slope = read_json(str(tmp_path / "slope.json"))
    assert code == 0
    assert header == ["n", "mean_mse", "stderr"]
    assert [row[0] for row in rows] == ["100", "200", "400", "800"]
    assert all(float(row[1]) == 0.0 for row in rows)
    assert slope["fitted_slope"] is None


def test_invalid_experiment_settings(capsys, test_config_path, tmp_path):
    code, _, err = run(capsys, "--config", test_config_path, "experiment", "rates", "--reps", "1",
                       "--out", str(tmp_path))

    assert code == 2
    assert error_record(err)["error"] == "ConfigurationError"


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "--config", str(tmp_path / "absent.yaml"), "eigs", "--help")

    assert code == 2
    assert error_record(err)["error"] == "ConfigurationError"


def test_seed_after_subcommand_matches_group_seed(capsys, test_config_path, tmp_path):
    group, local, other = tmp_path / "group", tmp_path / "local", tmp_path / "other"

    assert run(capsys, "--seed", "5", "--config", test_config_path, "gen", "--n", "80", "--out", str(group))[0] == 0
    assert run(capsys, "--config", test_config_path, "gen", "--n", "80", "--seed", "5", "--out", str(local))[0] == 0
    assert run(capsys, "--seed", "5", "--config", test_config_path, "gen", "--n", "80", "--seed", "6",
               "--out", str(other))[0] == 0

    assert (group / "y.csv").read_bytes() == (local / "y.csv").read_bytes()
    assert (group / "y.csv").read_bytes() != (other / "y.csv").read_bytes()
    assert read_json(str(other / "manifest.json"))["config"]["seed"] == 6


def test_experiment_accepts_seed_after_kind(capsys, test_config_path, tmp_path):
    code, _, _ = run(capsys, "--config", test_config_path, "experiment", "variance-sums", "--seed", "7",
                     "--n-grid", "1000", "--out", str(tmp_path))

    assert code == 0
    assert read_json(str(tmp_path / "manifest.json"))["config"]["seed"] == 7


@pytest.mark.parametrize("command", ["fit", "test", "eigs"])
def test_data_commands_accept_seed(capsys, three_point_files, tmp_path, command):
    points, responses = three_point_files
    out = tmp_path / ("result.json" if command == "test" else "out.csv")
    args = [command, "--data", points, "--r", "1.0", "--seed", "11", "--out", str(out)]
    if command != "eigs":
        args[3:3] = ["--response", responses, "--rho", "0"]
    if command == "test":
        args[3:3] = ["--calibration", "spectral"]

    code, _, _ = run(capsys, *args)

    assert code == 0
    assert read_json(str(tmp_path / "manifest.json"))["config"]["seed"] == 11


def test_negative_seed_is_a_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "gen", "--n", "10", "--seed", "-1", "--out", str(tmp_path))

    assert code == 2
    assert "--seed" in error_record(err)["message"]


def test_eigs_writes_edge_list(capsys, three_point_files, tmp_path):
    edges = tmp_path / "edges.csv"

    code, _, _ = run(capsys, "eigs", "--data", three_point_files[0], "--r", "1.0", "--edges", str(edges),
                     "--out", str(tmp_path / "eigs.csv"))

    assert code == 0
    assert edges.read_text().splitlines() == ["i,j,weight", "0,1,0.5"]
    assert read_json(str(tmp_path / "manifest.json"))["outputs"]["edges.csv"] == content_hash(str(edges))


def test_invalid_graph_section_is_a_configuration_error(capsys, three_point_files, tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("graph:\n  leaf_size: 0\n")

    code, _, err = run(capsys, "--config", str(config), "eigs", "--data", three_point_files[0],
                       "--out", str(tmp_path / "eigs.csv"))

    assert code == 2
    assert error_record(err)["error"] == "ConfigurationError"


@pytest.mark.parametrize("design, expected", [
    ("uniform-cube", [1.0, 1.0]),
    ("circle", [1.0 / (2.0 * np.pi), 1.0 / (2.0 * np.pi)]),
])
def test_generate_records_density_bounds(capsys, tmp_path, design, expected):
    code, _, _ = run(capsys, "gen", "--n", "40", "--design", design, "--d", "2", "--out", str(tmp_path))

    assert code == 0
    assert read_json(str(tmp_path / "manifest.json"))["density_bounds"] == pytest.approx(expected)


def test_generate_lipschitz_density_bounds_bracket_the_density(capsys, tmp_path):
    code, _, _ = run(capsys, "gen", "--n", "40", "--design", "lipschitz-density", "--d", "1", "--tilt", "0.5",
                     "--out", str(tmp_path))

    p_min, p_max = read_json(str(tmp_path / "manifest.json"))["density_bounds"]
    assert code == 0
    assert 0.0 < p_min < 1.0 < p_max
    assert p_max / p_min == pytest.approx(3.0)


def test_swiss_roll_has_no_density_bounds(capsys, tmp_path):
    code, _, _ = run(capsys, "gen", "--n", "40", "--design", "swiss-roll", "--d", "3", "--out", str(tmp_path))

    assert code == 0
    assert read_json(str(tmp_path / "manifest.json"))["density_bounds"] is None


def test_fit_against_generated_truth_reports_errors(capsys, test_config_path, tmp_path):
    data_dir = tmp_path / "data"
    assert run(capsys, "--config", test_config_path, "gen", "--n", "200", "--seed", "3", "--out", str(data_dir))[0] == 0

    code, _, _ = run(capsys, "--config", test_config_path, "fit", "--data", str(data_dir / "points.csv"),
                     "--response", str(data_dir / "y.csv"), "--truth", str(data_dir),
                     "--out", str(tmp_path / "fit" / "f_hat.csv"))

    manifest = read_json(str(tmp_path / "fit" / "manifest.json"))
    assert code == 0
    assert 0.0 < manifest["in_sample_mse"] < 1.0
    assert 0.0 < manifest["out_of_sample_mse"] < 1.0


def test_suite_runs_each_kind_into_its_own_directory(capsys, test_config_path, tmp_path):
    code, _, _ = run(capsys, "--config", test_config_path, "suite", "--kinds", "variance-sums,seminorm",
                     "--n-grid", "200,400", "--d-list", "1", "--seed", "4", "--out", str(tmp_path))

    assert code == 0
    for kind in ("variance-sums", "seminorm"):
        assert read_json(str(tmp_path / kind / "manifest.json"))["config"]["seed"] == 4
    assert read_json(str(tmp_path / "variance-sums" / "summary.json"))["all_hold"] is True


def test_suite_rejects_unknown_kinds(capsys, tmp_path):
    code, _, err = run(capsys, "suite", "--kinds", "rates,bogus", "--out", str(tmp_path))

    assert code == 2
    assert "--kinds" in error_record(err)["message"]

"""
Command-line interface for lapsmooth.
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
from rich.console import Console
from rich.table import Table

from . import __version__
from .config import get_config_value, graph_options, load_config, solver_options
from .core.estimator import extend_voronoi, fit, out_of_sample_error, resolve_tuning
from .core.gof import gof_test_permutation, gof_test_spectral
from .core.graph import PointCloud, build_graph, export_edge_list
from .core.kernels import KernelFamily, KernelSpec
from .core.solver import SpectrumMode, SpectrumResult, export_spectrum, full_spectrum, partial_spectrum
from .core.synthetic import (
    DesignFamily,
    SignalFamily,
    density_bounds,
    design_from_dict,
    evaluate_signal,
    make_dataset,
    signal_from_dict,
)
from .exceptions import ConfigurationError, InputError, LapSmoothError, UnsupportedError
from .experiments.base_experiment import ExperimentKind, parse_n_grid
from .runner import ExperimentRunner
from .utils.io import read_json, read_matrix_csv, read_vector_csv, write_json, write_manifest, write_matrix_csv, write_table_csv
from .utils.logger import setup_logger
from .utils.parallel import resolve_threads


console = Console()

KERNELS = [family.value for family in KernelFamily if family != KernelFamily.CUSTOM_TABLE]
DESIGNS = [family.value for family in DesignFamily]
SIGNALS = [family.value for family in SignalFamily if family != SignalFamily.CUSTOM]


def _auto_or_float(value: Optional[str], flag: str) -> Optional[float]:
    """Parse a ``<val|auto>`` flag; auto becomes None."""
    if value is None or value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f"expected a number or 'auto', got {value!r}", param_hint=flag)


def _load_cloud(data: str, dim_used: Optional[int]) -> PointCloud:
    points = read_matrix_csv(data)
    return PointCloud(points=points, intrinsic_dim=dim_used)


def _print_summary(title: str, rows: Dict[str, Any]):
    table = Table(title=title)
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    for key, value in rows.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        table.add_row(key, str(value))
    console.print(table)


SEED_TYPE = click.IntRange(0, 2 ** 64 - 1)

# Subcommands accept --seed after their name too; it overrides the group value
seed_option = click.option('--seed', 'seed', type=SEED_TYPE, default=None, help='Master seed (default: the group --seed)')


def _seed(obj: Dict[str, Any], seed: Optional[int]) -> int:
    return obj["seed"] if seed is None else seed


@click.group()
@click.version_option(version=__version__, prog_name="lapsmooth")
@click.option('--seed', type=SEED_TYPE, default=0, show_default=True, help='Master seed')
@click.option('--threads', default=None, help='Worker threads (integer or auto)')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='Path to configuration file')
@click.pass_context
def cli(ctx, seed, threads, verbose, config_path):
    """lapsmooth - Laplacian smoothing estimation and testing on neighborhood graphs"""
    config = load_config(config_path)
    level = "DEBUG" if verbose else get_config_value(config, "logging.level", "INFO")
    logger = setup_logger(
        "lapsmooth",
        level,
        log_file=get_config_value(config, "logging.file_path"),
        json_format=get_config_value(config, "logging.format", "json") == "json",
    )
    threads = threads if threads is not None else get_config_value(config, "performance.threads", "auto")
    try:
        resolve_threads(threads)
    except ValueError as e:
        raise ConfigurationError(str(e))

    ctx.obj = {
        "config": config,
        "seed": seed,
        "threads": threads,
        "log_level": level,
        "logger": logger,
    }


@cli.command()
@click.option('--n', 'n', type=click.IntRange(min=1), required=True, help='Sample size')
@click.option('--design', type=click.Choice(DESIGNS), default=DesignFamily.UNIFORM_CUBE.value, show_default=True)
@click.option('--d', 'd', type=click.IntRange(min=1), default=1, show_default=True, help='Ambient dimension')
@click.option('--domain', type=click.Choice(['unit', 'symmetric']), default='unit', show_default=True)
@click.option('--tilt', type=float, default=0.5, show_default=True, help='Density tilt (lipschitz-density)')
@click.option('--bump-height', type=float, default=0.0, show_default=True)
@click.option('--signal', type=click.Choice(SIGNALS), default=SignalFamily.COSINE_PRODUCT.value, show_default=True)
@click.option('--amplitude', type=float, default=1.0, show_default=True)
@click.option('--frequency', type=float, default=1.0, show_default=True)
@click.option('--design-file', type=click.Path(exists=True, dir_okay=False), help='DesignSpec JSON (overrides design flags)')
@click.option('--signal-file', type=click.Path(exists=True, dir_okay=False), help='SignalSpec JSON (overrides signal flags)')
@click.option('--no-noise', is_flag=True, help='Noiseless responses y = f0(X)')
@seed_option
@click.option('--out', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.pass_obj
def gen(obj, n, design, d, domain, tilt, bump_height, signal, amplitude, frequency,
        design_file, signal_file, no_noise, seed, out):
    """Generate a synthetic design and responses (points.csv, y.csv, f0.csv)."""
    seed = _seed(obj, seed)
    if design_file:
        design_spec = design_from_dict(read_json(design_file))
    else:
        design_spec = design_from_dict(
            {"family": design, "d": d, "domain": domain, "tilt": tilt, "bump_height": bump_height, "seed": seed}
        )
    if signal_file:
        signal_spec = signal_from_dict(read_json(signal_file))
    else:
        signal_spec = signal_from_dict(
            {"family": signal, "amplitude": amplitude, "frequency": frequency, "d": design_spec.d}
        )

    data = make_dataset(design_spec, signal_spec, n, seed=seed, noise=not no_noise)
    try:
        p_bounds: Optional[List[float]] = list(density_bounds(design_spec, seed=seed))
    except UnsupportedError:
        p_bounds = None
    out_dir = Path(out)
    files = [
        write_matrix_csv(str(out_dir / "points.csv"), data.points.points),
        write_matrix_csv(str(out_dir / "y.csv"), data.y),
        write_matrix_csv(str(out_dir / "f0.csv"), data.f0_at_points),
        write_json(str(out_dir / "design.json"), design_spec.model_dump(mode="json")),
        write_json(str(out_dir / "signal.json"), signal_spec.model_dump(mode="json")),
    ]
    write_manifest(
        str(out_dir),
        {"n": n, "seed": seed, "noise": not no_noise,
         "design": design_spec.model_dump(mode="json"), "signal": signal_spec.model_dump(mode="json")},
        files,
        extra={"command": "gen", "version": __version__, "density_bounds": p_bounds},
    )
    _print_summary("Generated data", {
        "n": n,
        "design": design_spec.family.value,
        "d": design_spec.d,
        "signal": signal_spec.family.value,
        "acceptance_rate": data.points.acceptance_rate,
        "p_min": p_bounds[0] if p_bounds else None,
        "p_max": p_bounds[1] if p_bounds else None,
        "out": str(out_dir),
    })


@cli.command(name="fit")
@click.option('--data', required=True, type=click.Path(exists=True, dir_okay=False), help='Points CSV (n rows, d columns)')
@click.option('--response', required=True, type=click.Path(exists=True, dir_okay=False), help='Responses CSV (one column)')
@click.option('--rho', default='auto', show_default=True, help='Penalty weight or auto')
@click.option('--r', 'r', default='auto', show_default=True, help='Graph radius or auto')
@click.option('--M', 'M', type=float, default=None, help='Sobolev radius (default estimator.M)')
@click.option('--C0', 'C0', type=float, default=None, help='Connectivity-rule constant (default estimator.C0)')
@click.option('--kernel', type=click.Choice(KERNELS), default=None, help='Kernel (default graph.kernel)')
@click.option('--dim-used', type=click.IntRange(min=1), default=None, help='Intrinsic dimension for tuning')
@click.option('--truth', 'truth_dir', type=click.Path(exists=True, file_okay=False),
              help='Directory written by gen; adds in-sample and out-of-sample errors')
@seed_option
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Output CSV (index,f_hat)')
@click.pass_obj
def fit_command(obj, data, response, rho, r, M, C0, kernel, dim_used, truth_dir, seed, out):
    """Fit the Laplacian smoothing estimator."""
    config = obj["config"]
    seed = _seed(obj, seed)
    cloud = _load_cloud(data, dim_used)
    y = read_vector_csv(response)
    if y.shape[0] != cloud.n:
        raise InputError(f"{response} has {y.shape[0]} responses for {cloud.n} points")
    f0_at_points = read_vector_csv(str(Path(truth_dir) / "f0.csv")) if truth_dir else None

    kernel = kernel or get_config_value(config, "graph.kernel", "uniform")
    tuning = resolve_tuning(
        cloud.n,
        cloud.dim_used,
        M if M is not None else get_config_value(config, "estimator.M", 1.0),
        "estimation",
        r=_auto_or_float(r, "--r"),
        rho=_auto_or_float(rho, "--rho"),
        C0=C0 if C0 is not None else get_config_value(config, "estimator.C0", 2.0),
    )
    kernel_spec = KernelSpec(kernel, dimension=cloud.dim_used)
    result = fit(cloud, y, tuning, kernel_spec, f0_at_points=f0_at_points,
                 options=solver_options(config), graph_options=graph_options(config))

    errors: Dict[str, Any] = {}
    if truth_dir:
        design_spec = design_from_dict(read_json(str(Path(truth_dir) / "design.json")))
        signal_spec = signal_from_dict(read_json(str(Path(truth_dir) / "signal.json")))
        errors = {
            "in_sample_mse": result.in_sample_mse,
            "out_of_sample_mse": out_of_sample_error(
                extend_voronoi(result), lambda x: evaluate_signal(signal_spec, x), design_spec, seed=seed
            ),
        }

    out_path = Path(out)
    fit_file = write_table_csv(str(out_path), ["index", "f_hat"], enumerate(result.f_hat.tolist()))
    write_manifest(
        str(out_path.parent),
        {"data": data, "response": response, "truth": truth_dir, "kernel": kernel, "seed": seed,
         "tuning": tuning.model_dump(mode="json"), "solver": solver_options(config).model_dump()},
        [fit_file],
        extra={"command": "fit", "version": __version__,
               "solve": result.solve.model_dump(exclude={"residual_history"}), **errors},
    )
    _print_summary("Fit", {
        "n": cloud.n,
        "r": tuning.r,
        "rho": tuning.rho,
        "edges": result.graph.edge_count,
        "iterations": result.solve.iterations,
        "residual": result.solve.final_residual,
        **errors,
        "out": str(out_path),
    })


@cli.command(name="test")
@click.option('--data', required=True, type=click.Path(exists=True, dir_okay=False), help='Points CSV')
@click.option('--response', required=True, type=click.Path(exists=True, dir_okay=False), help='Responses CSV')
@click.option('--null', 'null_file', type=click.Path(exists=True, dir_okay=False), help='f0* at the points (default 0)')
@click.option('--alpha', type=float, default=None, help='Level (default testing.alpha)')
@click.option('--calibration', type=click.Choice(['spectral', 'perm']), default=None, help='Threshold calibration')
@click.option('--n-perm', type=click.IntRange(min=1), default=None, help='Permutations (default testing.n_perm)')
@click.option('--rho', default='auto', show_default=True, help='Penalty weight or auto')
@click.option('--r', 'r', default='auto', show_default=True, help='Graph radius or auto')
@click.option('--M', 'M', type=float, default=None, help='Sobolev radius (default estimator.M)')
@click.option('--C0', 'C0', type=float, default=None, help='Connectivity-rule constant')
@click.option('--kernel', type=click.Choice(KERNELS), default=None)
@click.option('--dim-used', type=click.IntRange(min=1), default=None)
@seed_option
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Output JSON')
@click.pass_obj
def test_command(obj, data, response, null_file, alpha, calibration, n_perm, rho, r, M, C0, kernel, dim_used, seed, out):
    """Goodness-of-fit test of H0: f0 = f0* (default f0* = 0)."""
    config = obj["config"]
    seed = _seed(obj, seed)
    cloud = _load_cloud(data, dim_used)
    y = read_vector_csv(response)
    null_values = read_vector_csv(null_file) if null_file else None

    alpha = alpha if alpha is not None else get_config_value(config, "testing.alpha", 0.05)
    calibration = calibration or get_config_value(config, "testing.calibration", "perm")
    kernel = kernel or get_config_value(config, "graph.kernel", "uniform")
    tuning = resolve_tuning(
        cloud.n,
        cloud.dim_used,
        M if M is not None else get_config_value(config, "estimator.M", 1.0),
        "testing",
        r=_auto_or_float(r, "--r"),
        rho=_auto_or_float(rho, "--rho"),
        C0=C0 if C0 is not None else get_config_value(config, "estimator.C0", 2.0),
    )
    kernel_spec = KernelSpec(kernel, dimension=cloud.dim_used)
    options = solver_options(config)

    if calibration in ("perm", "permutation"):
        result = gof_test_permutation(
            cloud, y, tuning, kernel_spec,
            alpha=alpha,
            n_perm=n_perm or get_config_value(config, "testing.n_perm", 999),
            seed=seed,
            null_values=null_values,
            threads=obj["threads"],
            dense_cap=options.dense_cap,
            options=options,
            graph_options=graph_options(config),
        )
    elif calibration == "spectral":
        result = gof_test_spectral(
            cloud, y, tuning, kernel_spec,
            alpha=alpha,
            null_values=null_values,
            dense_cap=options.dense_cap,
            options=options,
            graph_options=graph_options(config),
        )
    else:
        raise ConfigurationError(f"calibration must be spectral or perm, got {calibration!r}")

    out_path = Path(out)
    result_file = write_json(str(out_path), result.model_dump(mode="json"))
    write_manifest(
        str(out_path.parent),
        {"data": data, "response": response, "null": null_file, "kernel": kernel, "seed": seed,
         "tuning": tuning.model_dump(mode="json")},
        [result_file],
        extra={"command": "test", "version": __version__},
    )
    _print_summary("Goodness-of-fit test", {
        "statistic": result.statistic,
        "threshold": result.threshold,
        "p_value": result.p_value,
        "reject": result.reject,
        "calibration": result.calibration.value,
    })


@cli.command()
@click.option('--data', required=True, type=click.Path(exists=True, dir_okay=False), help='Points CSV')
@click.option('--r', 'r', default='auto', show_default=True, help='Graph radius or auto')
@click.option('--C0', 'C0', type=float, default=None, help='Connectivity-rule constant')
@click.option('--kernel', type=click.Choice(KERNELS), default=None)
@click.option('--dim-used', type=click.IntRange(min=1), default=None)
@click.option('--mode', type=click.Choice(['full', 'partial']), default='full', show_default=True)
@click.option('--k', 'k', type=click.IntRange(min=1), default=None, help='Number of eigenvalues (all in full mode)')
@click.option('--which', type=click.Choice(['smallest', 'largest']), default='smallest', show_default=True)
@click.option('--edges', type=click.Path(dir_okay=False), default=None, help='Also write the edge list (i,j,weight) here')
@seed_option
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Output CSV (k,lambda)')
@click.pass_obj
def eigs(obj, data, r, C0, kernel, dim_used, mode, k, which, edges, seed, out):
    """Laplacian eigenvalues of the neighborhood graph."""
    config = obj["config"]
    seed = _seed(obj, seed)
    options = solver_options(config)
    cloud = _load_cloud(data, dim_used)
    kernel = kernel or get_config_value(config, "graph.kernel", "uniform")
    tuning = resolve_tuning(
        cloud.n,
        cloud.dim_used,
        get_config_value(config, "estimator.M", 1.0),
        r=_auto_or_float(r, "--r"),
        C0=C0 if C0 is not None else get_config_value(config, "estimator.C0", 2.0),
    )
    graph = build_graph(cloud, tuning.r, KernelSpec(kernel, dimension=cloud.dim_used), options=graph_options(config))

    if mode == "full":
        spectrum = full_spectrum(graph, dense_cap=options.dense_cap)
        if k is not None and k < graph.n:
            values = spectrum.eigenvalues[-k:] if which == "largest" else spectrum.eigenvalues[:k]
            spectrum = SpectrumResult(eigenvalues=values, mode=SpectrumMode.FULL_DENSE, n=graph.n, which=which)
    else:
        if k is None:
            raise click.UsageError("--k is required with --mode partial")
        spectrum = partial_spectrum(
            graph, k, which,
            tol=options.lanczos_tol,
            max_basis=options.lanczos_max_basis,
            max_k=options.lanczos_max_k,
            seed=seed,
        )

    out_path = Path(out)
    files = [export_spectrum(spectrum, out_path)]
    if edges:
        files.append(export_edge_list(graph, edges))
    write_manifest(
        str(out_path.parent),
        {"data": data, "kernel": kernel, "mode": mode, "k": k, "which": which, "seed": seed,
         "r": tuning.r, "edges": edges, "solver": options.model_dump()},
        files,
        extra={"command": "eigs", "version": __version__},
    )
    _print_summary("Spectrum", {
        "n": graph.n,
        "r": tuning.r,
        "count": int(spectrum.eigenvalues.shape[0]),
        "min": float(spectrum.eigenvalues[0]),
        "max": float(spectrum.eigenvalues[-1]),
        "mode": spectrum.mode.value,
    })


def _drop_none(values: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


@cli.command()
@click.argument('kind', type=click.Choice([k.value for k in ExperimentKind]))
@click.option('--d', 'd', type=click.IntRange(min=1), default=None, help='Ambient dimension')
@click.option('--d-list', default=None, help='Comma-separated dimensions (spectral, variance-sums)')
@click.option('--design', type=click.Choice(DESIGNS), default=None)
@click.option('--domain', type=click.Choice(['unit', 'symmetric']), default=None)
@click.option('--signal', type=click.Choice(SIGNALS), default=None)
@click.option('--amplitude', type=float, default=None)
@click.option('--n-grid', default=None, help='n values: "1000:10000:log5", "lo:hi:linK" or "250,500,1000"')
@click.option('--reps', type=int, default=None)
@click.option('--tuning', type=click.Choice(['oracle', 'theorem', 'fixed']), default=None)
@click.option('--rho', type=float, default=None, help='Penalty weight for fixed tuning')
@click.option('--M', 'M', type=float, default=None)
@click.option('--C0', 'C0', type=float, default=None)
@click.option('--dim-used', type=click.IntRange(min=1), default=None)
@click.option('--kernel', type=click.Choice(KERNELS), default=None)
@click.option('--alpha', type=float, default=None)
@click.option('--calibration', type=click.Choice(['spectral', 'perm']), default=None)
@click.option('--n-perm', type=int, default=None)
@click.option('--target-power', type=float, default=None)
@click.option('--no-noise', is_flag=True, help='Noiseless responses')
@seed_option
@click.option('--out', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.pass_obj
def experiment(obj, kind, d, d_list, design, domain, signal, amplitude, n_grid, reps, tuning, rho, M, C0,
               dim_used, kernel, alpha, calibration, n_perm, target_power, no_noise, seed, out):
    """Run an experiment: rates, manifold, spectral, seminorm, variance-sums, power or certificate."""
    dims: Optional[List[int]] = None
    if d_list:
        try:
            dims = [int(part) for part in d_list.split(",") if part.strip()]
        except ValueError:
            raise click.BadParameter(f"expected comma-separated integers, got {d_list!r}", param_hint="--d-list")
    elif d is not None and kind in (ExperimentKind.SPECTRAL.value, ExperimentKind.VARIANCE_SUMS.value):
        dims = [d]

    overrides: Dict[str, Any] = {
        "seed": _seed(obj, seed),
        "n_grid": parse_n_grid(n_grid) if n_grid else None,
        "reps": reps,
        "tuning": tuning,
        "rho": rho,
        "M": M,
        "C0": C0,
        "dim_used": dim_used,
        "kernel": kernel,
        "alpha": alpha,
        "calibration": calibration,
        "n_perm": n_perm,
        "target_power": target_power,
        "d_list": dims,
        "noise": False if no_noise else None,
        "out": out,
        "design": _drop_none({"family": design, "d": d, "domain": domain}) or None,
        "signal": _drop_none({"family": signal, "amplitude": amplitude, "d": d}) or None,
    }

    runner = ExperimentRunner(config=obj["config"], log_level=obj["log_level"])
    outcome = runner.run_experiment(kind, overrides, out_dir=out, threads=obj["threads"])
    summary = {
        key: value for key, value in outcome["output"].summary.items()
        if not isinstance(value, (dict, list))
    }
    summary["files"] = len(outcome["files"])
    _print_summary(f"Experiment {kind}", summary)


@cli.command()
@click.option('--kinds', required=True, help='Comma-separated experiment kinds, run in order')
@click.option('--n-grid', default=None, help='n values shared by every kind')
@click.option('--reps', type=int, default=None)
@click.option('--d-list', default=None, help='Comma-separated dimensions (spectral, variance-sums)')
@seed_option
@click.option('--out', required=True, type=click.Path(file_okay=False), help='Output directory; one subdirectory per kind')
@click.pass_obj
def suite(obj, kinds, n_grid, reps, d_list, seed, out):
    """Run several experiments with their configured defaults, each into OUT/<kind>."""
    names = [part.strip() for part in kinds.split(",") if part.strip()]
    valid = [k.value for k in ExperimentKind]
    unknown = [name for name in names if name not in valid]
    if unknown or not names:
        raise click.BadParameter(f"expected kinds from {valid}, got {kinds!r}", param_hint="--kinds")
    try:
        dims = [int(part) for part in d_list.split(",") if part.strip()] if d_list else None
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {d_list!r}", param_hint="--d-list")

    overrides = _drop_none({
        "seed": _seed(obj, seed),
        "n_grid": parse_n_grid(n_grid) if n_grid else None,
        "reps": reps,
        "d_list": dims,
    })
    runner = ExperimentRunner(config=obj["config"], log_level=obj["log_level"])
    outcomes = runner.run_suite(names, out, overrides=overrides, threads=obj["threads"])
    _print_summary("Suite", {outcome["kind"]: len(outcome["files"]) for outcome in outcomes})


def _report_error(name: str, message: str, exit_code: int):
    click.echo(json.dumps({"error": name, "message": message, "exit_code": exit_code}), err=True)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI and map the outcome to an exit code.

    0 success, 2 usage/configuration/input error, 3 solver failure,
    4 capacity error, 1 anything else. Errors go to stderr as one JSON line.
    """
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = cli.main(args=args, prog_name="lapsmooth", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        _report_error(type(e).__name__, e.format_message(), 2)
        return 2
    except click.ClickException as e:
        _report_error(type(e).__name__, e.format_message(), e.exit_code)
        return e.exit_code
    except click.Abort:
        _report_error("Abort", "Aborted", 1)
        return 1
    except LapSmoothError as e:
        _report_error(type(e).__name__, str(e), e.exit_code)
        return e.exit_code
    except Exception as e:
        _report_error(type(e).__name__, str(e), 1)
        return 1
    return result if isinstance(result, int) else 0


if __name__ == '__main__':
    sys.exit(dispatch())

"""
Experiment runner

Loads configuration, registers every experiment kind and runs them one at a
time, writing CSV/JSON outputs plus a manifest for each run.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from . import __version__
from .config import get_config_value, load_config
from .exceptions import ConfigurationError
from .experiments import (
    CertificateExperiment,
    ManifoldRateExperiment,
    PowerExperiment,
    RateExperiment,
    SeminormExperiment,
    SpectralEnvelopeExperiment,
    VarianceSumExperiment,
)
from .experiments.base_experiment import ExperimentKind, ExperimentOutput, build_experiment_config
from .utils.io import write_manifest
from .utils.logger import StepLogger, setup_logger


class ExperimentRunner:
    """
    Runs the registered experiments and tracks their progress.
    """

    def __init__(
        self,
        config_path: Optional[str] = None,
        log_level: Optional[str] = None,
        config: Optional[Dict[str, Any]] = None,
    ):
        """
        Initialize the runner.

        Args:
            config_path: Path to a YAML configuration file
            log_level: Logging level; defaults to ``logging.level`` from the configuration
            config: Already-loaded configuration (takes precedence over config_path)
        """
        self.config = config if config is not None else load_config(config_path)
        self.logger = setup_logger(
            __name__,
            log_level or get_config_value(self.config, "logging.level", "INFO"),
            log_file=get_config_value(self.config, "logging.file_path"),
            json_format=get_config_value(self.config, "logging.format", "json") == "json",
        )

        self._initialize_experiments()

        self.state: Dict[str, Any] = {
            "status": "initialized",
            "current_run": 0,
            "total_runs": 0,
            "results": {},
            "errors": [],
        }

        self.logger.debug("Experiment runner initialized")

    def _initialize_experiments(self):
        """Initialize one handler per experiment kind."""
        self.experiments = {
            ExperimentKind.RATES: RateExperiment(self.config, self.logger),
            ExperimentKind.MANIFOLD: ManifoldRateExperiment(self.config, self.logger),
            ExperimentKind.SPECTRAL: SpectralEnvelopeExperiment(self.config, self.logger),
            ExperimentKind.SEMINORM: SeminormExperiment(self.config, self.logger),
            ExperimentKind.VARIANCE_SUMS: VarianceSumExperiment(self.config, self.logger),
            ExperimentKind.POWER: PowerExperiment(self.config, self.logger),
            ExperimentKind.CERTIFICATE: CertificateExperiment(self.config, self.logger),
        }

    def run_experiment(
        self,
        kind: Union[ExperimentKind, str],
        overrides: Optional[Dict[str, Any]] = None,
        out_dir: Optional[Union[str, Path]] = None,
        threads: Optional[Union[int, str]] = None,
    ) -> Dict[str, Any]:
        """
        Run one experiment and write its outputs.

        Args:
            kind: Experiment kind (e.g. "rates")
            overrides: Values taking precedence over the configuration file
            out_dir: Output directory; falls back to the ``out`` field
            threads: Worker threads; defaults to ``performance.threads``

        Returns:
            Dictionary with the status, the output object and the written files
        """
        try:
            kind = ExperimentKind(kind)
        except ValueError:
            known = ", ".join(k.value for k in ExperimentKind)
            raise ConfigurationError(f"Unknown experiment kind {kind!r} (expected one of {known})")

        cfg = build_experiment_config(kind.value, self.config, overrides or {})
        out_dir = out_dir or cfg.out
        if out_dir is None:
            raise ConfigurationError(f"No output directory given for the {kind.value} experiment")
        if threads is None:
            threads = get_config_value(self.config, "performance.threads", "auto")

        self.state["current_run"] += 1
        self.state["total_runs"] = max(self.state["total_runs"], self.state["current_run"])
        self.state["status"] = "running"

        try:
            with StepLogger(self.logger, f"experiment {kind.value}", self.state["current_run"]):
                output: ExperimentOutput = self.experiments[kind].execute(cfg, threads=threads)
                files = output.write(out_dir)
                manifest = write_manifest(
                    str(out_dir),
                    cfg.model_dump(mode="json"),
                    files,
                    extra={
                        "kind": kind.value,
                        "version": __version__,
                        "solver": self.experiments[kind].solver.model_dump(),
                        "graph": self.experiments[kind].graph_options.model_dump(),
                    },
                )
        except Exception as e:
            self.state["status"] = "failed"
            self.state["errors"].append(f"{kind.value}: {e}")
            raise

        self.state["status"] = "completed"
        self.state["results"][kind.value] = output.summary
        self.logger.info(f"Wrote {len(files) + 1} files to {out_dir}", kind=kind.value)
        return {
            "status": "success",
            "kind": kind.value,
            "output": output,
            "files": files + [manifest],
        }

    def run_suite(
        self,
        kinds: Sequence[Union[ExperimentKind, str]],
        out_dir: Union[str, Path],
        overrides: Optional[Dict[str, Any]] = None,
        threads: Optional[Union[int, str]] = None,
    ) -> List[Dict[str, Any]]:
        """Run several experiments in order, each into ``out_dir/<kind>``."""
        self.state["total_runs"] = self.state["current_run"] + len(kinds)
        results = []
        for kind in kinds:
            name = ExperimentKind(kind).value
            results.append(self.run_experiment(name, overrides, Path(out_dir) / name, threads))
        return results

    def get_status(self) -> Dict[str, Any]:
        """
        Get current runner status.

        Returns:
            Dictionary containing status and progress
        """
        total = self.state["total_runs"]
        return {
            "status": self.state["status"],
            "current_run": self.state["current_run"],
            "total_runs": total,
            "progress_percent": (self.state["current_run"] / total) * 100 if total else 0.0,
            "errors": self.state["errors"],
        }

"""Experiment implementations for lapsmooth."""

from .base_experiment import Experiment, ExperimentConfig, ExperimentKind, ExperimentOutput, parse_n_grid
from .certificate import CertificateExperiment, run_certificate_check
from .power import PowerExperiment, run_power_experiment
from .rates import (
    ManifoldRateExperiment,
    RateCurve,
    RateExperiment,
    run_manifold_rate_experiment,
    run_rate_experiment,
)
from .seminorm import SeminormExperiment, run_seminorm_check
from .slopes import fit_loglog_slope
from .spectral import SpectralEnvelopeExperiment, run_spectral_envelope
from .variance_sums import VarianceSumExperiment, run_variance_sum_check

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "ExperimentKind",
    "ExperimentOutput",
    "parse_n_grid",
    "RateCurve",
    "RateExperiment",
    "ManifoldRateExperiment",
    "SpectralEnvelopeExperiment",
    "SeminormExperiment",
    "VarianceSumExperiment",
    "PowerExperiment",
    "CertificateExperiment",
    "run_rate_experiment",
    "run_manifold_rate_experiment",
    "run_spectral_envelope",
    "run_seminorm_check",
    "run_variance_sum_check",
    "run_power_experiment",
    "run_certificate_check",
    "fit_loglog_slope",
]

"""Experiment harness: config, seeded trials, CSV/SVG output and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiment import SummaryRow, SweepSummary, run_experiment, run_trial, sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SummaryRow",
    "SweepSummary",
    "load_config",
    "run_experiment",
    "run_trial",
    "sweep",
]

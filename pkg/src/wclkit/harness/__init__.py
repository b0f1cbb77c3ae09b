"""Experiment configuration, presets and Monte Carlo orchestration."""

from wclkit.harness.config import (
    ChannelSpec,
    ConfigError,
    DeploymentSpec,
    EstimatorSpec,
    ExperimentConfig,
    OverheadSpec,
    config_from_dict,
    load_configs,
)
from wclkit.harness.io import RESULT_FIELDS, read_results_csv, write_results_csv
from wclkit.harness.presets import PRESETS, figure_preset
from wclkit.harness.runner import (
    HarnessError,
    ResultRow,
    run_experiment,
    run_overhead,
    run_theory,
    run_trials,
)

__all__ = [
    "PRESETS",
    "RESULT_FIELDS",
    "ChannelSpec",
    "ConfigError",
    "DeploymentSpec",
    "EstimatorSpec",
    "ExperimentConfig",
    "HarnessError",
    "OverheadSpec",
    "ResultRow",
    "config_from_dict",
    "figure_preset",
    "load_configs",
    "read_results_csv",
    "run_experiment",
    "run_overhead",
    "run_theory",
    "run_trials",
    "write_results_csv",
]

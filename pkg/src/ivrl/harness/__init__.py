"""Experiment harness: configs, runners, metrics, oracles, curve emission."""

from ivrl.harness.config import ConfigError, ExperimentConfig, parse_config, serialize_config
from ivrl.harness.curves import emit_curves
from ivrl.harness.gradcheck import grad_check_suite, suite_passed
from ivrl.harness.oracle import value_iteration_oracle
from ivrl.harness.runner import MetricsRow, read_metrics, run_experiment, write_metrics

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MetricsRow",
    "emit_curves",
    "grad_check_suite",
    "parse_config",
    "read_metrics",
    "run_experiment",
    "serialize_config",
    "suite_passed",
    "value_iteration_oracle",
    "write_metrics",
]

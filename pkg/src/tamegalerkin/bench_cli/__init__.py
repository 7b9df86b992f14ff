"""Experiment orchestration and the command line interface."""

from .cli import build_parser, main, write_csv
from .config import ConfigError, ExperimentConfig, config_hash, from_mapping, load_config
from .experiments import (
    ThresholdFit,
    ThresholdPoint,
    bisect_threshold,
    fit_exponent,
    newton_run,
    p1_profile,
    threshold_sweep,
)
from .invariants import CheckResult, run_suites

__all__ = [
    "main",
    "build_parser",
    "write_csv",
    "ConfigError",
    "ExperimentConfig",
    "config_hash",
    "from_mapping",
    "load_config",
    "ThresholdFit",
    "ThresholdPoint",
    "bisect_threshold",
    "fit_exponent",
    "newton_run",
    "p1_profile",
    "threshold_sweep",
    "CheckResult",
    "run_suites",
]

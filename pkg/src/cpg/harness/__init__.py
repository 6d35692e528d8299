"""Experiment orchestration: configs, runs, CSV logs, plots, CLI."""

from .config import (
    ConstraintSpec,
    ExperimentConfig,
    MeasureSpec,
    list_bundled_configs,
    load_config,
)
from .plots import emit_plots
from .runner import (
    mean_ci,
    read_run_csv,
    run_experiment,
    run_record_header,
    write_aggregate_csv,
    write_run_csv,
)

__all__ = [
    "ConstraintSpec",
    "ExperimentConfig",
    "MeasureSpec",
    "emit_plots",
    "list_bundled_configs",
    "load_config",
    "mean_ci",
    "read_run_csv",
    "run_experiment",
    "run_record_header",
    "write_aggregate_csv",
    "write_run_csv",
]

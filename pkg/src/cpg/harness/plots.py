"""Learning-curve plots regenerable from the CSVs alone.

Three SVGs per experiment: return and cost against cumulative trajectories
(the cost plot draws the threshold as a horizontal reference) and the
multipliers against the iteration index.  Omega sweeps overlay one curve per
omega value.  SVG metadata and hash salts are pinned so re-plotting identical
inputs is byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cpg"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from ..validation import ValidationError
from .config import ExperimentConfig
from .runner import omega_dirname, read_run_csv

_SAVE_KW = {"metadata": {"Date": None}, "format": "svg"}


def _load_curves(directory: Path) -> dict:
    aggregate = directory / "aggregate.csv"
    if not aggregate.exists():
        raise ValidationError(f"no aggregate.csv under {directory}")
    return read_run_csv(aggregate)


def _band(ax, x, curves, name, label):
    mean = curves[f"{name}_mean"]
    ci = curves[f"{name}_ci95"]
    (line,) = ax.plot(x, mean, label=label, linewidth=1.2)
    if ci.max() > 0:
        ax.fill_between(x, mean - ci, mean + ci, alpha=0.2, color=line.get_color())


def emit_plots(config: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Render the three learning-curve SVGs from the CSVs under ``out_dir``."""
    out_dir = Path(out_dir)
    groups: list[tuple[str, dict]] = []
    if config.is_sweep:
        for omega in config.omegas:
            groups.append((f"omega={omega:g}", _load_curves(out_dir / omega_dirname(omega))))
    else:
        groups.append((config.name, _load_curves(out_dir)))
    num_constraints = len(config.constraints)
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curves in groups:
        _band(ax, curves["trajectories_consumed"], curves, "mean_return", label)
    ax.set_xlabel("trajectories")
    ax.set_ylabel("mean return")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "return_vs_trajectories.svg"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, num_constraints, figsize=(6 * num_constraints, 4), squeeze=False)
    for i in range(num_constraints):
        ax = axes[0][i]
        for label, curves in groups:
            _band(ax, curves["trajectories_consumed"], curves, f"risk_{i + 1}", label)
        ax.axhline(config.constraints[i].threshold, color="black", linestyle="--",
                   linewidth=1.0, label=f"b={config.constraints[i].threshold:g}")
        ax.set_xlabel("trajectories")
        ax.set_ylabel(f"constraint {i + 1} risk value")
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "cost_vs_trajectories.svg"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, num_constraints, figsize=(6 * num_constraints, 4), squeeze=False)
    for i in range(num_constraints):
        ax = axes[0][i]
        for label, curves in groups:
            _band(ax, curves["iteration"], curves, f"lambda_{i + 1}", label)
        ax.set_xlabel("iteration")
        ax.set_ylabel(f"lambda_{i + 1}")
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "lambda_vs_iteration.svg"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    written.append(path)
    return written

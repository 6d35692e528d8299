"""Experiment execution: per-seed runs, CSV logging, and seed aggregation.

Every run directory gets a ``manifest.json`` (resolved config, overrides,
seeds, package version) plus one ``seed_<s>.csv`` per seed and an
``aggregate.csv`` with per-iteration mean and 95% confidence interval across
seeds.  Omega sweeps nest one subdirectory per omega value.  Floats are
serialized with 17 significant digits so CSVs round-trip and byte-compare.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..solver import RunLog, run_cpgae, run_cpgpe
from ..validation import ValidationError
from .config import ExperimentConfig

_FMT = "%.17g"


def _fmt(value: float) -> str:
    return _FMT % value


def run_record_header(num_constraints: int) -> list[str]:
    header = ["iteration", "trajectories_consumed", "mean_return"]
    header += [f"risk_{u}" for u in range(1, num_constraints + 1)]
    header += [f"lambda_{u}" for u in range(1, num_constraints + 1)]
    header += [f"eta_{u}" for u in range(1, num_constraints + 1)]
    header.append("lagrangian_estimate")
    return header


def write_run_csv(log: RunLog, path: Path):
    u = log.num_constraints
    lines = [",".join(run_record_header(u))]
    for i in range(len(log)):
        row = [str(log.iterations[i]), str(log.trajectories[i]), _fmt(log.mean_return[i])]
        row += [_fmt(x) for x in log.risk[i][1:]]
        row += [_fmt(x) for x in log.lam[i]]
        row += [_fmt(x) for x in log.eta[i][1:]]
        row.append(_fmt(log.lagrangian[i]))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def read_run_csv(path: Path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}


def mean_ci(values: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Normal-approximation 95% interval half-width: 1.96 * s / sqrt(n)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    mean = values.mean(axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean)
    se = values.std(axis=axis, ddof=1) / np.sqrt(n)
    return mean, 1.96 * se


def write_aggregate_csv(logs: list[RunLog], path: Path):
    if not logs:
        raise ValidationError("no run logs to aggregate")
    u = logs[0].num_constraints
    iterations = np.asarray(logs[0].iterations)
    trajectories = np.asarray(logs[0].trajectories)
    for log in logs[1:]:
        if len(log) != len(logs[0]):
            raise ValidationError("run logs must cover identical iteration counts")

    columns: list[tuple[str, np.ndarray, np.ndarray]] = []
    returns = np.array([log.mean_return for log in logs])
    columns.append(("mean_return", *mean_ci(returns)))
    for i in range(u):
        risk = np.array([[r[i + 1] for r in log.risk] for log in logs])
        columns.append((f"risk_{i + 1}", *mean_ci(risk)))
    for i in range(u):
        lam = np.array([[l[i] for l in log.lam] for log in logs])
        columns.append((f"lambda_{i + 1}", *mean_ci(lam)))
    lag = np.array([log.lagrangian for log in logs])
    columns.append(("lagrangian_estimate", *mean_ci(lag)))

    header = ["iteration", "trajectories_consumed"]
    for name, _, _ in columns:
        header += [f"{name}_mean", f"{name}_ci95"]
    lines = [",".join(header)]
    for t in range(len(iterations)):
        row = [str(int(iterations[t])), str(int(trajectories[t]))]
        for _, mean, ci in columns:
            row += [_fmt(mean[t]), _fmt(ci[t])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _run_single(config: ExperimentConfig, seed: int, omega: float) -> RunLog:
    env = config.build_env()
    objective = config.build_objective()
    solver_config = config.build_solver_config(seed, omega)
    actor = config.build_actor(env)
    if config.algorithm == "cpgae":
        _, log = run_cpgae(env, actor, objective, solver_config)
    else:
        hyperpolicy, build_policy = actor
        _, log = run_cpgpe(env, hyperpolicy, build_policy, objective, solver_config)
    return log


def omega_dirname(omega: float) -> str:
    return f"omega_{omega:g}"


def run_experiment(config: ExperimentConfig, out_dir: Path | None = None
                   ) -> dict[float, list[RunLog]]:
    """Run every (omega, seed) combination and write CSVs, aggregates, and the
    manifest under the output directory.  Returns the logs keyed by omega."""
    out_dir = Path(out_dir) if out_dir is not None else config.resolved_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": config.to_dict(),
        "overrides": list(config.overrides),
        "seeds": list(config.seeds),
        "version": __version__,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    results: dict[float, list[RunLog]] = {}
    for omega in config.omegas:
        omega_dir = out_dir / omega_dirname(omega) if config.is_sweep else out_dir
        omega_dir.mkdir(parents=True, exist_ok=True)
        logs = []
        for seed in config.seeds:
            log = _run_single(config, seed, omega)
            write_run_csv(log, omega_dir / f"seed_{seed}.csv")
            logs.append(log)
        write_aggregate_csv(logs, omega_dir / "aggregate.csv")
        results[omega] = logs
    return results

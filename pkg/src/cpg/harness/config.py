"""Experiment configuration: a documented YAML key tree, loaded fail-closed.

Top-level keys::

    name: str                     # defaults to the file stem
    description: str              # optional one-liner for list-configs
    algorithm: cpgae | cpgpe
    environment:
      kind: dgww | cost_lqr
      ... per-kind parameters (see _ENV_KEYS)
      clip_actions:               # optional wrapper, continuous envs only
        a_min, a_max, threshold, cost_scale
    policy:
      kind: tabular_softmax | linear_gaussian | linear_deterministic
      sigma2: float               # policy (cpgae) or hyperpolicy (cpgpe) variance
      temperature: float          # softmax only
    objective:                    # optional risk measure on the objective
      measure, param, aggregation
    constraints:                  # one entry per environment constraint
      - measure, param, threshold, aggregation
    solver:
      omega: float or list of floats (a sweep)
      iterations, batch_size, batching, conservative_offset,
      force_reinforce, lambda_weighted_eta, lambda_init,
      step_sizes: {primal|dual|eta: {schedule: constant|adam, value: float}}
    seeds: [int, ...]
    output_dir: str or null       # null -> $CPG_OUTPUT_DIR or ./runs

Unknown keys anywhere raise a validation error naming the offending path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..envs import ClippedActionCost, Continuous, CostLqr, Discrete, WalledGridworld
from ..estimators import DISCOUNTED_SUM, PER_STEP_MEAN, ConstrainedObjective
from ..policies import (
    GaussianHyperpolicy,
    LinearDeterministicPolicy,
    LinearGaussianPolicy,
    TabularSoftmaxPolicy,
)
from ..risk import RiskMeasure
from ..solver import AdamSchedule, ConstantSchedule, SolverConfig
from ..validation import ValidationError

_ALGORITHMS = ("cpgae", "cpgpe")
_ENV_KINDS = ("dgww", "cost_lqr")
_POLICY_KINDS = ("tabular_softmax", "linear_gaussian", "linear_deterministic")
_MEASURES = ("expected_cost", "mean_variance", "cvar", "chance")
_AGGREGATIONS = (DISCOUNTED_SUM, PER_STEP_MEAN)

_ENV_KEYS = {
    "dgww": {"side_length", "horizon", "gamma"},
    "cost_lqr": {
        "a", "b", "q", "r", "init_low", "init_high", "horizon", "gamma",
        "reward_scale", "cost_scale",
    },
}
_CLIP_KEYS = {"a_min", "a_max", "threshold", "cost_scale"}
_POLICY_KEYS = {"kind", "sigma2", "temperature"}
_MEASURE_KEYS = {"measure", "param", "aggregation"}
_CONSTRAINT_KEYS = _MEASURE_KEYS | {"threshold"}
_SOLVER_KEYS = {
    "omega", "iterations", "batch_size", "batching", "conservative_offset",
    "force_reinforce", "lambda_weighted_eta", "lambda_init", "step_sizes",
}
_STEP_KEYS = {"schedule", "value"}
_TOP_KEYS = {
    "name", "description", "algorithm", "environment", "policy", "objective",
    "constraints", "solver", "seeds", "output_dir",
}


def _reject_unknown(mapping: dict, allowed: set, path: str):
    if not isinstance(mapping, dict):
        raise ValidationError(f"{path} must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ValidationError(f"unknown key {sorted(unknown)[0]!r} under {path}")


def _require(mapping: dict, key: str, path: str = ""):
    if key not in mapping:
        where = f"{path}.{key}" if path else key
        raise ValidationError(f"missing required key {where}")
    return mapping[key]


@dataclass
class MeasureSpec:
    measure: str = "expected_cost"
    param: float | None = None
    aggregation: str = DISCOUNTED_SUM

    def build(self) -> RiskMeasure:
        if self.measure == "expected_cost":
            return RiskMeasure.expected_cost()
        if self.param is None:
            raise ValidationError(f"{self.measure} needs a param")
        return RiskMeasure(self.measure, float(self.param))


@dataclass
class ConstraintSpec(MeasureSpec):
    threshold: float = 0.0


@dataclass
class ExperimentConfig:
    name: str
    algorithm: str
    environment: dict
    policy: dict
    objective_spec: MeasureSpec
    constraints: list[ConstraintSpec]
    solver: dict
    seeds: list[int]
    output_dir: str | None = None
    description: str = ""
    overrides: list[str] = field(default_factory=list)

    @property
    def omegas(self) -> list[float]:
        omega = self.solver["omega"]
        return [float(o) for o in omega] if isinstance(omega, (list, tuple)) else [float(omega)]

    @property
    def is_sweep(self) -> bool:
        return len(self.omegas) > 1

    def resolved_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get("CPG_OUTPUT_DIR", "runs")) / self.name

    # -- factories ----------------------------------------------------------

    def build_env(self):
        env_cfg = dict(self.environment)
        kind = env_cfg.pop("kind")
        clip = env_cfg.pop("clip_actions", None)
        native_constraints = 1
        thresholds = [c.threshold for c in self.constraints]
        if clip is not None:
            native_constraints += 1
        if len(thresholds) != native_constraints:
            raise ValidationError(
                f"config lists {len(thresholds)} constraints but the environment has "
                f"{native_constraints}"
            )
        if kind == "dgww":
            env = WalledGridworld(threshold=thresholds[0], **env_cfg)
        else:
            for key in ("a", "b", "q", "r"):
                if env_cfg.get(key) is not None:
                    env_cfg[key] = np.asarray(env_cfg[key], dtype=float)
            env = CostLqr(
                a_mat=env_cfg.pop("a", None), b_mat=env_cfg.pop("b", None),
                threshold=thresholds[0], **env_cfg,
            )
        if clip is not None:
            env = ClippedActionCost(
                env, clip["a_min"], clip["a_max"],
                threshold=thresholds[1], cost_scale=clip.get("cost_scale"),
            )
        return env

    def build_objective(self) -> ConstrainedObjective:
        measures = [self.objective_spec.build()] + [c.build() for c in self.constraints]
        aggregations = [self.objective_spec.aggregation] + [c.aggregation for c in self.constraints]
        thresholds = np.array([c.threshold for c in self.constraints])
        gamma = self.environment.get("gamma", 1.0)
        return ConstrainedObjective(tuple(measures), thresholds, float(gamma),
                                    tuple(aggregations))

    def build_actor(self, env):
        """Policy for cpgae; (hyperpolicy, build_policy) pair for cpgpe."""
        kind = self.policy["kind"]
        sigma2 = float(self.policy.get("sigma2", 1e-3))
        temperature = float(self.policy.get("temperature", 1.0))
        action_kind = env.descriptor.action_kind
        if self.algorithm == "cpgae":
            if kind == "tabular_softmax":
                if not isinstance(action_kind, Discrete):
                    raise ValidationError("tabular_softmax needs a discrete-action environment")
                return TabularSoftmaxPolicy(env.n_states, action_kind.n_actions,
                                            temperature=temperature)
            if kind == "linear_gaussian":
                if not isinstance(action_kind, Continuous):
                    raise ValidationError("linear_gaussian needs a continuous-action environment")
                return LinearGaussianPolicy.zeros(action_kind.action_dim,
                                                  env.descriptor.state_dim, sigma2)
            raise ValidationError(f"cpgae cannot use the deterministic policy {kind!r}")
        # cpgpe: Gaussian hyperpolicy over the inner policy's flat parameters
        if kind == "linear_deterministic":
            if not isinstance(action_kind, Continuous):
                raise ValidationError("linear_deterministic needs a continuous-action environment")
            shape = (action_kind.action_dim, env.descriptor.state_dim)
            hyper = GaussianHyperpolicy(np.zeros(shape).ravel(), sigma2)
            return hyper, lambda theta: LinearDeterministicPolicy(theta.reshape(shape))
        if kind == "tabular_softmax":
            if not isinstance(action_kind, Discrete):
                raise ValidationError("tabular_softmax needs a discrete-action environment")
            shape = (env.n_states, action_kind.n_actions)
            hyper = GaussianHyperpolicy(np.zeros(shape).ravel(), sigma2)
            return hyper, lambda theta: TabularSoftmaxPolicy(
                shape[0], shape[1], theta.reshape(shape), temperature
            )
        raise ValidationError(f"cpgpe cannot sample parameters for {kind!r}")

    def build_solver_config(self, seed: int, omega: float) -> SolverConfig:
        steps = self.solver["step_sizes"]
        return SolverConfig(
            omega=omega,
            iterations=int(self.solver["iterations"]),
            batch_size=int(self.solver["batch_size"]),
            primal_schedule=_build_schedule(steps["primal"]),
            dual_schedule=_build_schedule(steps["dual"]),
            eta_schedule=_build_schedule(steps.get("eta", steps["primal"])),
            batching=self.solver.get("batching", "full_batch_alternate"),
            conservative_offset=float(self.solver.get("conservative_offset", 0.0)),
            seed=int(seed),
            force_reinforce=bool(self.solver.get("force_reinforce", False)),
            lambda_weighted_eta=bool(self.solver.get("lambda_weighted_eta", True)),
            lambda_init=self.solver.get("lambda_init"),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "algorithm": self.algorithm,
            "environment": self.environment,
            "policy": self.policy,
            "objective": vars(self.objective_spec).copy(),
            "constraints": [vars(c).copy() for c in self.constraints],
            "solver": self.solver,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
        }


def _build_schedule(spec: dict):
    _reject_unknown(spec, _STEP_KEYS, "solver.step_sizes.*")
    kind = spec.get("schedule", "constant")
    value = float(_require(spec, "value", "solver.step_sizes.*"))
    if kind == "constant":
        return ConstantSchedule(value)
    if kind == "adam":
        return AdamSchedule(value)
    raise ValidationError(f"unknown schedule {kind!r}")


def _validate_measure(raw: dict, path: str, with_threshold: bool):
    allowed = _CONSTRAINT_KEYS if with_threshold else _MEASURE_KEYS
    _reject_unknown(raw, allowed, path)
    measure = raw.get("measure", "expected_cost")
    if measure not in _MEASURES:
        raise ValidationError(f"{path}.measure must be one of {_MEASURES}, got {measure!r}")
    aggregation = raw.get("aggregation", DISCOUNTED_SUM)
    if aggregation not in _AGGREGATIONS:
        raise ValidationError(f"{path}.aggregation must be one of {_AGGREGATIONS}")
    if with_threshold:
        threshold = float(_require(raw, "threshold", path))
        return ConstraintSpec(measure, raw.get("param"), aggregation, threshold)
    return MeasureSpec(measure, raw.get("param"), aggregation)


def parse_config(raw: dict, name: str = "config") -> ExperimentConfig:
    _reject_unknown(raw, _TOP_KEYS, "top level")
    algorithm = _require(raw, "algorithm")
    if algorithm not in _ALGORITHMS:
        raise ValidationError(f"algorithm must be one of {_ALGORITHMS}, got {algorithm!r}")

    env_raw = dict(_require(raw, "environment"))
    kind = _require(env_raw, "kind", "environment")
    if kind not in _ENV_KINDS:
        raise ValidationError(f"environment.kind must be one of {_ENV_KINDS}, got {kind!r}")
    _reject_unknown(env_raw, _ENV_KEYS[kind] | {"kind", "clip_actions"}, "environment")
    if "clip_actions" in env_raw and env_raw["clip_actions"] is not None:
        _reject_unknown(env_raw["clip_actions"], _CLIP_KEYS, "environment.clip_actions")

    policy_raw = dict(raw.get("policy", {}))
    _reject_unknown(policy_raw, _POLICY_KEYS, "policy")
    if _require(policy_raw, "kind", "policy") not in _POLICY_KINDS:
        raise ValidationError(f"policy.kind must be one of {_POLICY_KINDS}")

    objective_spec = _validate_measure(dict(raw.get("objective") or {}), "objective", False)
    constraints_raw = raw.get("constraints") or []
    if not isinstance(constraints_raw, list) or not constraints_raw:
        raise ValidationError("constraints must be a nonempty list")
    constraints = [
        _validate_measure(dict(c), f"constraints[{i}]", True)
        for i, c in enumerate(constraints_raw)
    ]

    solver_raw = dict(_require(raw, "solver"))
    _reject_unknown(solver_raw, _SOLVER_KEYS, "solver")
    for key in ("iterations", "batch_size"):
        value = _require(solver_raw, key, "solver")
        if int(value) < 1:
            raise ValidationError(f"solver.{key} must be >= 1, got {value}")
    steps_raw = _require(solver_raw, "step_sizes", "solver")
    _reject_unknown(steps_raw, {"primal", "dual", "eta"}, "solver.step_sizes")
    for group in ("primal", "dual"):
        _require(steps_raw, group, "solver.step_sizes")
    omega = solver_raw.get("omega", 0.0)
    for value in omega if isinstance(omega, list) else [omega]:
        if float(value) < 0:
            raise ValidationError("solver.omega must be nonnegative")

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ValidationError("seeds must be a nonempty list of integers")

    config = ExperimentConfig(
        name=str(raw.get("name", name)),
        algorithm=algorithm,
        environment=env_raw,
        policy=policy_raw,
        objective_spec=objective_spec,
        constraints=constraints,
        solver=solver_raw,
        seeds=[int(s) for s in seeds],
        output_dir=raw.get("output_dir"),
        description=str(raw.get("description", "")),
    )
    # Surface construction errors (bad thresholds, shape mismatches) at load time.
    config.build_objective()
    config.build_env()
    return config


def bundled_config_dir():
    return resources.files("cpg") / "configs"


def list_bundled_configs() -> list[tuple[str, str]]:
    """(name, description) pairs for every bundled config."""
    out = []
    for entry in sorted(bundled_config_dir().iterdir()):
        if entry.name.endswith(".yaml"):
            raw = yaml.safe_load(entry.read_text())
            out.append((entry.name[:-5], str(raw.get("description", ""))))
    return out


def apply_override(raw: dict, override: str):
    """Apply one ``dotted.path=value`` override onto the raw config tree."""
    if "=" not in override:
        raise ValidationError(f"override {override!r} is not of the form path=value")
    path, _, value_text = override.partition("=")
    keys = path.strip().split(".")
    node = raw
    for key in keys[:-1]:
        key = int(key) if key.lstrip("-").isdigit() else key
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            raise ValidationError(f"override path {path!r} does not exist") from None
    leaf = keys[-1]
    leaf = int(leaf) if leaf.lstrip("-").isdigit() else leaf
    try:
        node[leaf]
    except (KeyError, IndexError, TypeError):
        raise ValidationError(f"override path {path!r} does not exist") from None
    node[leaf] = yaml.safe_load(value_text)


def load_config(source: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a config from a file path or a bundled config name."""
    path = Path(source)
    if path.exists():
        text = path.read_text()
        name = path.stem
    else:
        candidate = bundled_config_dir() / f"{source}.yaml"
        try:
            text = candidate.read_text()
        except (FileNotFoundError, OSError):
            raise ValidationError(
                f"{source!r} is neither a file nor a bundled config; "
                "see `cpg list-configs`"
            ) from None
        name = str(source)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"could not parse {source}: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{source} must contain a mapping at the top level")
    overrides = list(overrides or [])
    for override in overrides:
        apply_override(raw, override)
    config = parse_config(raw, name=name)
    config.overrides = overrides
    return config

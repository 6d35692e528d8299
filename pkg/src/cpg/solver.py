"""Alternating primal-dual solver over the ridge-regularized Lagrangian.

One loop serves both exploration styles: action-based (a stochastic policy
collects the batch and the policy parameters are the primal variable) and
parameter-based (a Gaussian hyperpolicy samples one parameter vector per
trajectory and its mean is the primal variable).  Primal and risk variables
descend, multipliers ascend, and every update is projected: lambda onto the
nonnegative orthant intersected with the L2 ball of radius
sqrt(U) * j_max / omega, eta onto [0, bound] per component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs import collect_batch, discounted_return, rollout
from .estimators import (
    ACTION_BASED,
    PARAMETER_BASED,
    Batch,
    ConstrainedObjective,
    dual_gradient,
    eta_gradient,
    lagrangian_value,
    primal_gradient_gpomdp,
    primal_gradient_pb,
    primal_gradient_reinforce,
    risk_values,
)
from .policies import LinearDeterministicPolicy, LinearPolicyStack
from .validation import ConfigurationError, check_nonnegative

FULL_BATCH_ALTERNATE = "full_batch_alternate"
HALF_BATCH_SEQUENTIAL = "half_batch_sequential"


class SolverDivergenceError(RuntimeError):
    """Raised when a gradient turns non-finite instead of silently clipping."""


# ---------------------------------------------------------------------------
# Step-size schedules


@dataclass(frozen=True)
class ConstantSchedule:
    value: float

    def __post_init__(self):
        check_nonnegative("step size", self.value)


@dataclass(frozen=True)
class AdamSchedule:
    """Bias-corrected first/second-moment scaling of the raw gradient."""

    value: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        check_nonnegative("step size", self.value)


@dataclass
class _AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def init_schedule_state(schedule, dim: int):
    if isinstance(schedule, AdamSchedule):
        return _AdamState(np.zeros(dim), np.zeros(dim))
    return None


def apply_schedule(schedule, state, gradient: np.ndarray) -> np.ndarray:
    """Turn a raw gradient into the update step (same sign as the gradient)."""
    if isinstance(schedule, ConstantSchedule):
        return schedule.value * gradient
    state.t += 1
    state.m = schedule.beta1 * state.m + (1.0 - schedule.beta1) * gradient
    state.v = schedule.beta2 * state.v + (1.0 - schedule.beta2) * gradient**2
    m_hat = state.m / (1.0 - schedule.beta1**state.t)
    v_hat = state.v / (1.0 - schedule.beta2**state.t)
    return schedule.value * m_hat / (np.sqrt(v_hat) + schedule.eps)


# ---------------------------------------------------------------------------
# Projections and closed forms


def lambda_ball_radius(omega: float, num_constraints: int, j_max: float) -> float:
    if omega <= 0.0:
        return np.inf
    return np.sqrt(num_constraints) * j_max / omega


def project_lambda(raw, omega: float, j_max: float) -> np.ndarray:
    """Euclidean projection onto the multiplier set: clamp to the nonnegative
    orthant, then rescale onto the ball when the radius is exceeded.  With
    omega = 0 the ball is absent and only the clamp applies."""
    raw = np.asarray(raw, dtype=float).reshape(-1)
    clamped = np.maximum(raw, 0.0)
    radius = lambda_ball_radius(omega, raw.size, j_max)
    norm = float(np.linalg.norm(clamped))
    if norm > radius:
        clamped = clamped * (radius / norm)
    return clamped


def lambda_star_closed_form(j_minus_b, omega: float) -> np.ndarray:
    """Maximizer of the regularized Lagrangian in lambda: (J - b)^+ / omega."""
    if omega <= 0.0:
        raise ConfigurationError("the closed-form maximizer requires omega > 0")
    return np.maximum(np.asarray(j_minus_b, dtype=float), 0.0) / omega


def h_omega_closed_form(j0: float, j_minus_b, omega: float) -> float:
    """Primal function max_lambda L_omega: J0 + ||(J - b)^+||^2 / (2 omega)."""
    if omega <= 0.0:
        raise ConfigurationError("the closed-form primal function requires omega > 0")
    plus = np.maximum(np.asarray(j_minus_b, dtype=float), 0.0)
    return float(j0 + 0.5 * plus @ plus / omega)


def potential_diag(exact_j0: float, exact_j, b, omega: float, lam, h_star_ref: float,
                   chi: float = 0.1) -> float:
    """Convergence diagnostic a + chi * b for exactly computed performances.

    a is the primal-function gap H_omega(v) - H*, b the dual-maximization gap
    H_omega(v) - L_omega(v, lambda).  Both vanish at a regularized saddle
    point.  ``h_star_ref`` must come from an external search over v.
    """
    if h_star_ref is None:
        raise ConfigurationError("potential_diag needs an externally computed H*")
    j_minus_b = np.asarray(exact_j, dtype=float) - np.asarray(b, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    h_val = h_omega_closed_form(exact_j0, j_minus_b, omega)
    l_val = float(exact_j0 + lam @ j_minus_b - 0.5 * omega * lam @ lam)
    return (h_val - h_star_ref) + chi * (h_val - l_val)


# ---------------------------------------------------------------------------
# Solver configuration and state


@dataclass
class SolverConfig:
    omega: float = 1e-4
    iterations: int = 100
    batch_size: int = 10
    primal_schedule: ConstantSchedule | AdamSchedule = ConstantSchedule(0.01)
    dual_schedule: ConstantSchedule | AdamSchedule = ConstantSchedule(0.1)
    eta_schedule: ConstantSchedule | AdamSchedule = ConstantSchedule(0.01)
    batching: str = FULL_BATCH_ALTERNATE
    conservative_offset: float = 0.0
    seed: int = 0
    force_reinforce: bool = False
    lambda_weighted_eta: bool = True
    lambda_init: np.ndarray | float | None = None
    eta_init: np.ndarray | None = None

    def __post_init__(self):
        check_nonnegative("omega", self.omega)
        check_nonnegative("conservative_offset", self.conservative_offset)
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.batching not in (FULL_BATCH_ALTERNATE, HALF_BATCH_SEQUENTIAL):
            raise ConfigurationError(f"unknown batching mode {self.batching!r}")
        if self.batching == HALF_BATCH_SEQUENTIAL and self.batch_size % 2 != 0:
            raise ConfigurationError("half-batch mode needs an even batch size")


@dataclass
class PrimalDualState:
    v: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    k: int
    actor: object = None


@dataclass
class RunLog:
    """Per-iteration history.  ``risk`` holds sample E[f] + g for every cost
    index (0 is the objective), lambda/eta are post-update values, and the
    Lagrangian estimate uses the pre-update multipliers the batch saw."""

    iterations: list[int] = field(default_factory=list)
    trajectories: list[int] = field(default_factory=list)
    mean_return: list[float] = field(default_factory=list)
    risk: list[np.ndarray] = field(default_factory=list)
    lam: list[np.ndarray] = field(default_factory=list)
    eta: list[np.ndarray] = field(default_factory=list)
    lagrangian: list[float] = field(default_factory=list)
    primal_step_norm: list[float] = field(default_factory=list)
    dual_step_norm: list[float] = field(default_factory=list)
    eta_step_norm: list[float] = field(default_factory=list)

    def append(self, iteration, trajectories, mean_return, risk, lam, eta, lagrangian,
               primal_step_norm, dual_step_norm, eta_step_norm):
        self.iterations.append(int(iteration))
        self.trajectories.append(int(trajectories))
        self.mean_return.append(float(mean_return))
        self.risk.append(np.asarray(risk, dtype=float).copy())
        self.lam.append(np.asarray(lam, dtype=float).copy())
        self.eta.append(np.asarray(eta, dtype=float).copy())
        self.lagrangian.append(float(lagrangian))
        self.primal_step_norm.append(float(primal_step_norm))
        self.dual_step_norm.append(float(dual_step_norm))
        self.eta_step_norm.append(float(eta_step_norm))

    def __len__(self) -> int:
        return len(self.iterations)

    @property
    def num_constraints(self) -> int:
        return self.lam[0].size if self.lam else 0


# ---------------------------------------------------------------------------
# Actor plumbing


class _ActionBasedDriver:
    mode = ACTION_BASED

    def __init__(self, policy):
        self.policy = policy

    @property
    def dim(self) -> int:
        return self.policy.num_params

    def get_flat(self) -> np.ndarray:
        return self.policy.get_flat()

    def set_flat(self, flat):
        self.policy.set_flat(flat)

    def collect(self, env, n, horizon, rng) -> Batch:
        return Batch(collect_batch(env, self.policy, n, horizon, rng), ACTION_BASED)

    def primal_gradient(self, batch, lam, eta, objective, force_reinforce):
        fn = primal_gradient_reinforce if force_reinforce else primal_gradient_gpomdp
        return fn(batch, self.policy, lam, eta, objective)

    @property
    def actor(self):
        return self.policy


class _ParameterBasedDriver:
    mode = PARAMETER_BASED

    def __init__(self, hyperpolicy, build_policy):
        self.hyperpolicy = hyperpolicy
        self.build_policy = build_policy

    @property
    def dim(self) -> int:
        return self.hyperpolicy.dim

    def get_flat(self) -> np.ndarray:
        return self.hyperpolicy.get_flat()

    def set_flat(self, flat):
        self.hyperpolicy.set_flat(flat)

    def collect(self, env, n, horizon, rng) -> Batch:
        thetas = self.hyperpolicy.sample_thetas(n, rng)
        policies = [self.build_policy(theta) for theta in thetas]
        if hasattr(env, "rollout_batch") and all(
            isinstance(p, LinearDeterministicPolicy) for p in policies
        ):
            stack = LinearPolicyStack(np.stack([p.theta for p in policies]))
            trajectories = env.rollout_batch(stack, n, horizon, rng, sampled_thetas=thetas)
        else:
            trajectories = [
                rollout(env, policies[j], horizon, rng, sampled_theta=thetas[j])
                for j in range(n)
            ]
        return Batch(trajectories, PARAMETER_BASED)

    def primal_gradient(self, batch, lam, eta, objective, force_reinforce):
        return primal_gradient_pb(batch, self.hyperpolicy, lam, eta, objective)

    @property
    def actor(self):
        return self.hyperpolicy


# ---------------------------------------------------------------------------
# Main loop


def _check_finite(grad, name, iteration):
    if not np.all(np.isfinite(grad)):
        raise SolverDivergenceError(f"{name} gradient turned non-finite at iteration {iteration}")


def _run_loop(env, driver, objective: ConstrainedObjective, config: SolverConfig
              ) -> tuple[PrimalDualState, RunLog]:
    descriptor = env.descriptor
    if descriptor.horizon is None:
        raise ConfigurationError("the solver needs a finite environment horizon")
    horizon = descriptor.horizon
    num_constraints = objective.num_constraints
    num_measures = len(objective.measures)
    j_max = descriptor.j_max

    # Constraint-side cap for the multiplier ball and the eta clamp.
    eta_bounds = np.array([objective.stat_bound(u, j_max) for u in range(num_measures)])
    lam_j_max = float(eta_bounds[1:].max()) if num_constraints else j_max

    effective = ConstrainedObjective(
        objective.measures,
        objective.thresholds - config.conservative_offset,
        objective.gamma,
        objective.aggregations,
    )

    if config.lambda_init is None:
        lam = np.zeros(num_constraints)
    else:
        lam = np.broadcast_to(np.asarray(config.lambda_init, dtype=float),
                              (num_constraints,)).copy()
    lam = project_lambda(lam, config.omega, lam_j_max)
    if config.eta_init is None:
        eta = np.concatenate(([0.0], effective.thresholds))
    else:
        eta = np.asarray(config.eta_init, dtype=float).reshape(num_measures).copy()
    eta = np.clip(eta, 0.0, eta_bounds)
    any_eta = any(m.needs_eta for m in objective.measures)

    rng = np.random.default_rng(config.seed)
    primal_state = init_schedule_state(config.primal_schedule, driver.dim)
    dual_state = init_schedule_state(config.dual_schedule, num_constraints)
    eta_state = init_schedule_state(config.eta_schedule, num_measures)

    log = RunLog()
    consumed = 0
    half = config.batching == HALF_BATCH_SEQUENTIAL
    n_collect = config.batch_size // 2 if half else config.batch_size

    for k in range(1, config.iterations + 1):
        batch = driver.collect(env, n_collect, horizon, rng)
        consumed += len(batch)
        stats = effective.cost_stat_matrix(batch.trajectories)
        batch_return = float(
            np.mean([discounted_return(t, effective.gamma) for t in batch.trajectories])
        )
        risks = risk_values(batch, eta, effective, stats=stats)
        lag = lagrangian_value(batch, lam, eta, effective, config.omega)

        primal_norm = dual_norm = eta_norm = 0.0
        if num_constraints == 0:
            # No dual variable: the Lagrangian collapses to the objective and
            # every iteration is a primal step.
            do_primal, do_dual = True, False
        elif half:
            do_primal = do_dual = True
        else:
            do_primal = k % 2 == 1
            do_dual = k % 2 == 0
        if do_primal:
            grad_v = driver.primal_gradient(batch, lam, eta, effective, config.force_reinforce)
            _check_finite(grad_v, "primal", k)
            step_v = apply_schedule(config.primal_schedule, primal_state, grad_v)
            driver.set_flat(driver.get_flat() - step_v)
            primal_norm = float(np.linalg.norm(step_v))
            if any_eta:
                grad_eta = eta_gradient(batch, lam, eta, effective, config.lambda_weighted_eta)
                _check_finite(grad_eta, "eta", k)
                step_eta = apply_schedule(config.eta_schedule, eta_state, grad_eta)
                eta = np.clip(eta - step_eta, 0.0, eta_bounds)
                eta_norm = float(np.linalg.norm(step_eta))
        if do_dual:
            if half:
                batch = driver.collect(env, n_collect, horizon, rng)
                consumed += len(batch)
            grad_lam = dual_gradient(batch, lam, eta, effective, config.omega)
            _check_finite(grad_lam, "dual", k)
            step_lam = apply_schedule(config.dual_schedule, dual_state, grad_lam)
            lam = project_lambda(lam + step_lam, config.omega, lam_j_max)
            dual_norm = float(np.linalg.norm(step_lam))

        log.append(k, consumed, batch_return, risks, lam, eta, lag,
                   primal_norm, dual_norm, eta_norm)

    state = PrimalDualState(driver.get_flat(), lam, eta, config.iterations, driver.actor)
    return state, log


def run_cpgae(env, policy, objective: ConstrainedObjective, config: SolverConfig
              ) -> tuple[PrimalDualState, RunLog]:
    """Action-based solver: learns the stochastic policy's parameters."""
    return _run_loop(env, _ActionBasedDriver(policy), objective, config)


def run_cpgpe(env, hyperpolicy, build_policy, objective: ConstrainedObjective,
              config: SolverConfig) -> tuple[PrimalDualState, RunLog]:
    """Parameter-based solver: learns the hyperpolicy mean; ``build_policy``
    turns a sampled flat parameter vector into the inner policy."""
    return _run_loop(env, _ParameterBasedDriver(hyperpolicy, build_policy), objective, config)

"""Sample-based gradient estimators of the regularized Lagrangian.

The Lagrangian couples an objective statistic (index 0, the negated return)
with U constraint statistics through multipliers lambda and a ridge term
-(omega/2)||lambda||^2.  Each statistic is filtered through a risk measure's
f/g pair with its own eta variable.  This module turns a batch of
trajectories into the primal (policy or hyperpolicy parameters), dual
(lambda), and risk (eta) gradients.

Sign conventions: the dual gradient is J(v, eta) - b - omega * lambda, i.e.
the exact derivative of the ridge-regularized Lagrangian, so dual ascent
shrinks lambda once constraints are satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs import Trajectory, discounted_cost, per_step_mean_cost
from .risk import EXPECTED_COST, MEAN_VARIANCE, RiskMeasure
from .validation import ValidationError

ACTION_BASED = "action_based"
PARAMETER_BASED = "parameter_based"

DISCOUNTED_SUM = "discounted_sum"
PER_STEP_MEAN = "per_step_mean"
_AGGREGATIONS = (DISCOUNTED_SUM, PER_STEP_MEAN)


@dataclass
class ConstrainedObjective:
    """Risk measures, thresholds, and cost aggregation for one problem.

    ``measures`` and ``aggregations`` have U + 1 entries (index 0 is the
    objective, built on the negated reward); ``thresholds`` has U entries.
    Aggregation picks the per-trajectory cost statistic fed to f: the
    discounted cumulative cost, or its undiscounted per-step mean.
    """

    measures: tuple[RiskMeasure, ...]
    thresholds: np.ndarray
    gamma: float
    aggregations: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.measures = tuple(self.measures)
        self.thresholds = np.asarray(self.thresholds, dtype=float).reshape(-1)
        if len(self.measures) != self.thresholds.size + 1:
            raise ValidationError("need one measure per constraint plus the objective")
        if not self.aggregations:
            self.aggregations = tuple(DISCOUNTED_SUM for _ in self.measures)
        self.aggregations = tuple(self.aggregations)
        if len(self.aggregations) != len(self.measures):
            raise ValidationError("need one aggregation per measure")
        for agg in self.aggregations:
            if agg not in _AGGREGATIONS:
                raise ValidationError(f"unknown aggregation {agg!r}")

    @property
    def num_constraints(self) -> int:
        return self.thresholds.size

    def stat_bound(self, index: int, j_max: float) -> float:
        """Upper bound of the aggregated cost statistic at ``index``."""
        return j_max if self.aggregations[index] == DISCOUNTED_SUM else 1.0

    def cost_stat(self, traj: Trajectory, index: int) -> float:
        if self.aggregations[index] == DISCOUNTED_SUM:
            return discounted_cost(traj, index, self.gamma)
        return per_step_mean_cost(traj, index)

    def cost_stat_matrix(self, trajectories) -> np.ndarray:
        """(N, U + 1) matrix of aggregated cost statistics."""
        n = len(trajectories)
        out = np.empty((n, len(self.measures)))
        for j, traj in enumerate(trajectories):
            for u in range(len(self.measures)):
                out[j, u] = self.cost_stat(traj, u)
        return out


def expected_cost_objective(thresholds, gamma: float,
                            aggregations: tuple[str, ...] | None = None) -> ConstrainedObjective:
    """Risk-neutral problem: expected cost everywhere."""
    thresholds = np.asarray(thresholds, dtype=float).reshape(-1)
    measures = tuple(RiskMeasure.expected_cost() for _ in range(thresholds.size + 1))
    return ConstrainedObjective(measures, thresholds, gamma, aggregations or ())


@dataclass
class Batch:
    """Trajectories collected under one (hyper)policy."""

    trajectories: list[Trajectory]
    mode: str = ACTION_BASED

    def __post_init__(self):
        if not self.trajectories:
            raise ValidationError("batch is empty")
        if self.mode not in (ACTION_BASED, PARAMETER_BASED):
            raise ValidationError(f"unknown batch mode {self.mode!r}")
        if self.mode == PARAMETER_BASED:
            if any(t.sampled_theta is None for t in self.trajectories):
                raise ValidationError("parameter-based batches need sampled_theta on every trajectory")

    def __len__(self) -> int:
        return len(self.trajectories)


def _lambda_weights(lam, num_constraints: int) -> np.ndarray:
    """Weights (1, lambda_1, ..., lambda_U) applied to per-index terms."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != num_constraints:
        raise ValidationError(f"lambda must have length {num_constraints}")
    return np.concatenate(([1.0], lam))


def _check_eta(eta, num_measures: int) -> np.ndarray:
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size != num_measures:
        raise ValidationError(f"eta must have length {num_measures}")
    return eta


def _score_weighted_sum(policy, traj: Trajectory, weights: np.ndarray) -> np.ndarray:
    if hasattr(policy, "score_weighted_sum"):
        return policy.score_weighted_sum(traj.states, traj.actions, weights)
    total = None
    for t in range(len(traj)):
        term = weights[t] * np.asarray(policy.score(traj.states[t], traj.actions[t]), dtype=float)
        total = term if total is None else total + term
    return total


def _per_step_costs(traj: Trajectory, index: int) -> np.ndarray:
    return -traj.rewards if index == 0 else traj.costs[:, index - 1]


def primal_gradient_reinforce(batch: Batch, policy, lam, eta,
                              objective: ConstrainedObjective) -> np.ndarray:
    """Score-times-total-weight estimator of the primal gradient.

    (1/N) sum_j [sum_t d log pi(a_t|s_t)] [f_0(C_0, eta_0)
                                           + sum_u lambda_u f_u(C_u, eta_u)].
    """
    if batch.mode != ACTION_BASED:
        raise ValidationError("action-based estimator needs an action-based batch")
    weights = _lambda_weights(lam, objective.num_constraints)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    total = np.zeros(policy.num_params)
    for j, traj in enumerate(batch.trajectories):
        scalar = sum(
            weights[u] * float(objective.measures[u].f_eval(stats[j, u], eta[u]))
            for u in range(len(objective.measures))
        )
        total += _score_weighted_sum(policy, traj, np.full(len(traj), scalar))
    return total / len(batch)


def _gpomdp_eligible(objective: ConstrainedObjective, index: int) -> bool:
    # The per-step decomposition needs the statistic to be a fixed-weight sum
    # over steps; per-step means divide by the realized length, so they (and
    # the hinge/indicator measures) fall back to the score-times-weight form.
    return (
        objective.aggregations[index] == DISCOUNTED_SUM
        and objective.measures[index].kind in (EXPECTED_COST, MEAN_VARIANCE)
    )


def primal_gradient_gpomdp(batch: Batch, policy, lam, eta,
                           objective: ConstrainedObjective) -> np.ndarray:
    """Variance-reduced primal gradient.

    Expected-cost terms weight each step's discounted cost by only the past
    scores; mean-variance splits into that form for its linear part plus the
    full-score form for the squared part.  Terms whose measure or aggregation
    does not decompose per step keep the full-score form.
    """
    if batch.mode != ACTION_BASED:
        raise ValidationError("action-based estimator needs an action-based batch")
    weights = _lambda_weights(lam, objective.num_constraints)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    total = np.zeros(policy.num_params)
    for j, traj in enumerate(batch.trajectories):
        horizon = len(traj)
        discounts = objective.gamma ** np.arange(horizon)
        step_costs = np.zeros(horizon)
        scalar = 0.0
        for u, measure in enumerate(objective.measures):
            if _gpomdp_eligible(objective, u):
                coeff = 1.0
                if measure.kind == MEAN_VARIANCE:
                    kappa = measure.param
                    coeff = 1.0 - 2.0 * kappa * eta[u]
                    scalar += weights[u] * kappa * stats[j, u] ** 2
                step_costs += weights[u] * coeff * discounts * _per_step_costs(traj, u)
            else:
                scalar += weights[u] * float(measure.f_eval(stats[j, u], eta[u]))
        # Past-scores-only weighting: score at step h picks up the costs from h on.
        step_weights = np.cumsum(step_costs[::-1])[::-1] + scalar
        total += _score_weighted_sum(policy, traj, step_weights)
    return total / len(batch)


def primal_gradient_pb(batch: Batch, hyperpolicy, lam, eta,
                       objective: ConstrainedObjective) -> np.ndarray:
    """(1/N) sum_j d log nu(theta_j) [f_0(C_0, eta_0) + sum_u lambda_u f_u(C_u, eta_u)]."""
    if batch.mode != PARAMETER_BASED:
        raise ValidationError("parameter-based estimator needs a parameter-based batch")
    weights = _lambda_weights(lam, objective.num_constraints)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    total = np.zeros(hyperpolicy.dim)
    for j, traj in enumerate(batch.trajectories):
        scalar = sum(
            weights[u] * float(objective.measures[u].f_eval(stats[j, u], eta[u]))
            for u in range(len(objective.measures))
        )
        total += scalar * hyperpolicy.score(traj.sampled_theta)
    return total / len(batch)


def dual_gradient(batch: Batch, lam, eta, objective: ConstrainedObjective,
                  omega: float) -> np.ndarray:
    """Component u: (1/N) sum_j f_u(C_u, eta_u) + g_u(eta_u) - b_u - omega lambda_u."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    out = np.empty(objective.num_constraints)
    for u in range(1, len(objective.measures)):
        measure = objective.measures[u]
        mean_f = float(np.mean(measure.f_eval(stats[:, u], eta[u])))
        out[u - 1] = mean_f + measure.g_eval(eta[u]) - objective.thresholds[u - 1] \
            - omega * lam[u - 1]
    return out


def eta_gradient(batch: Batch, lam, eta, objective: ConstrainedObjective,
                 lambda_weighted: bool = True) -> np.ndarray:
    """Subgradient of the Lagrangian in eta, component per cost index.

    Constraint components are weighted by their multiplier (the chain rule
    through the Lagrangian); ``lambda_weighted=False`` drops that factor and
    descends each constraint's own risk value instead.  Eta-free components
    are zero.
    """
    weights = _lambda_weights(lam, objective.num_constraints)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    out = np.zeros(len(objective.measures))
    for u, measure in enumerate(objective.measures):
        if not measure.needs_eta:
            continue
        mean_sub = float(np.mean(measure.f_eta_subgrad(stats[:, u], eta[u])))
        term = mean_sub + measure.g_eta_grad(eta[u])
        out[u] = (weights[u] * term) if lambda_weighted else term
    return out


def lagrangian_value(batch: Batch, lam, eta, objective: ConstrainedObjective,
                     omega: float) -> float:
    """Sample estimate of the ridge-regularized Lagrangian."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    eta = _check_eta(eta, len(objective.measures))
    stats = objective.cost_stat_matrix(batch.trajectories)
    risks = risk_values(batch, eta, objective, stats=stats)
    value = risks[0]
    for u in range(1, len(objective.measures)):
        value += lam[u - 1] * (risks[u] - objective.thresholds[u - 1])
    return float(value - 0.5 * omega * lam @ lam)


def risk_values(batch: Batch, eta, objective: ConstrainedObjective,
                stats: np.ndarray | None = None) -> np.ndarray:
    """Sample E[f] + g per cost index (the logged per-constraint risk value)."""
    eta = _check_eta(eta, len(objective.measures))
    if stats is None:
        stats = objective.cost_stat_matrix(batch.trajectories)
    out = np.empty(len(objective.measures))
    for u, measure in enumerate(objective.measures):
        out[u] = float(np.mean(measure.f_eval(stats[:, u], eta[u]))) + measure.g_eval(eta[u])
    return out

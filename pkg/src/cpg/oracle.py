"""Exact brute-force reference computations on small tabular CMDPs.

Everything here trades efficiency for transparency: exhaustive trajectory
enumeration, exact expectations, central finite differences, and grid search.
These are the independent truth sources the estimator and closed-form tests
check against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Discrete, EnvDescriptor, StepOutcome, Trajectory, discounted_cost
from .risk import RiskMeasure
from .validation import ValidationError, check_probability_vector

DEFAULT_ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class TabularCmdp:
    """Fully enumerable finite CMDP.

    ``transition`` is (S, A, S) row-stochastic, ``reward`` (S, A) in [-1, 0],
    ``costs`` (U, S, A) in [0, 1], ``mu0`` the initial distribution.  The
    horizon must stay small enough for exhaustive enumeration.
    """

    transition: np.ndarray
    reward: np.ndarray
    costs: np.ndarray
    mu0: np.ndarray
    gamma: float
    horizon: int

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=float)
        reward = np.asarray(self.reward, dtype=float)
        costs = np.asarray(self.costs, dtype=float)
        mu0 = np.asarray(self.mu0, dtype=float)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "mu0", mu0)
        s, a, s2 = transition.shape
        if s != s2:
            raise ValidationError("transition must have shape (S, A, S)")
        if reward.shape != (s, a):
            raise ValidationError("reward must have shape (S, A)")
        if costs.ndim != 3 or costs.shape[1:] != (s, a):
            raise ValidationError("costs must have shape (U, S, A)")
        check_probability_vector("mu0", mu0)
        for i in range(s):
            for j in range(a):
                check_probability_vector(f"transition[{i},{j}]", transition[i, j])
        if np.any(reward > 0) or np.any(reward < -1):
            raise ValidationError("rewards must lie in [-1, 0]")
        if np.any(costs < 0) or np.any(costs > 1):
            raise ValidationError("costs must lie in [0, 1]")
        if self.horizon < 1:
            raise ValidationError("horizon must be positive")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def num_constraints(self) -> int:
        return self.costs.shape[0]

    @property
    def descriptor(self) -> EnvDescriptor:
        return EnvDescriptor(
            state_dim=1,
            action_kind=Discrete(self.n_actions),
            num_constraints=self.num_constraints,
            thresholds=tuple(0.0 for _ in range(self.num_constraints)),
            gamma=self.gamma,
            horizon=self.horizon,
        )

    # Sampling interface so the CMDP doubles as a rollout environment.
    def initial_state(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n_states, p=self.mu0))

    def step(self, state: int, action: int, rng: np.random.Generator) -> StepOutcome:
        s, a = int(state), int(action)
        next_state = int(rng.choice(self.n_states, p=self.transition[s, a]))
        return StepOutcome(next_state, float(self.reward[s, a]), self.costs[:, s, a].copy(), False)


def _policy_probs(policy, state: int) -> np.ndarray:
    return np.asarray(policy.action_probs(state), dtype=float)


def enumerate_trajectories(cmdp: TabularCmdp, policy, cap: int = DEFAULT_ENUMERATION_CAP
                           ) -> list[tuple[Trajectory, float]]:
    """Exhaustive list of (trajectory, probability) pairs.

    The probability is mu0(s0) * prod_t pi(a_t|s_t) p(s_{t+1}|s_t, a_t); pairs
    with zero probability are pruned.  Refuses when the worst-case count
    exceeds ``cap``.
    """
    start_support = int(np.count_nonzero(cmdp.mu0))
    worst_case = start_support * (cmdp.n_actions * cmdp.n_states) ** cmdp.horizon
    if worst_case > cap:
        raise ValidationError(
            f"enumeration would visit up to {worst_case} trajectories (cap {cap})"
        )
    out: list[tuple[Trajectory, float]] = []
    horizon = cmdp.horizon

    def extend(state, prob, states, actions):
        depth = len(states)
        if depth == horizon:
            s_arr = np.asarray(states, dtype=int)
            a_arr = np.asarray(actions, dtype=int)
            rewards = cmdp.reward[s_arr, a_arr]
            costs = cmdp.costs[:, s_arr, a_arr].T
            out.append((Trajectory(s_arr, a_arr, rewards, costs), prob))
            return
        probs = _policy_probs(policy, state)
        for action in range(cmdp.n_actions):
            pa = probs[action]
            if pa == 0.0:
                continue
            states.append(state)
            actions.append(action)
            if depth == horizon - 1:
                # Last action: the next state no longer affects the trajectory.
                extend(-1, prob * pa, states, actions)
            else:
                for next_state in range(cmdp.n_states):
                    pt = cmdp.transition[state, action, next_state]
                    if pt > 0.0:
                        extend(next_state, prob * pa * pt, states, actions)
            states.pop()
            actions.pop()

    for s0 in range(cmdp.n_states):
        if cmdp.mu0[s0] > 0.0:
            extend(s0, float(cmdp.mu0[s0]), [], [])
    return out


def exact_performance(cmdp: TabularCmdp, policy, i: int,
                      enumeration: list[tuple[Trajectory, float]] | None = None) -> float:
    """E[C_i(tau)] by full enumeration; i = 0 gives the negated return."""
    enumeration = enumeration or enumerate_trajectories(cmdp, policy)
    return float(
        sum(p * discounted_cost(traj, i, cmdp.gamma) for traj, p in enumeration)
    )


def exact_risk_J(cmdp: TabularCmdp, policy, measure: RiskMeasure, eta: float, i: int,
                 enumeration: list[tuple[Trajectory, float]] | None = None) -> float:
    """E[f(C_i(tau), eta)] + g(eta) by full enumeration."""
    enumeration = enumeration or enumerate_trajectories(cmdp, policy)
    expected_f = sum(
        p * float(measure.f_eval(discounted_cost(traj, i, cmdp.gamma), eta))
        for traj, p in enumeration
    )
    return float(expected_f + measure.g_eval(eta))


def cost_distribution(cmdp: TabularCmdp, policy, i: int,
                      enumeration: list[tuple[Trajectory, float]] | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Discrete distribution of C_i(tau) under the policy (values, probs)."""
    enumeration = enumeration or enumerate_trajectories(cmdp, policy)
    buckets: dict[float, float] = {}
    for traj, p in enumeration:
        c = round(discounted_cost(traj, i, cmdp.gamma), 12)
        buckets[c] = buckets.get(c, 0.0) + p
    values = np.array(sorted(buckets))
    probs = np.array([buckets[v] for v in values])
    return values, probs


def exact_lagrangian(cmdp: TabularCmdp, policy, lam, eta, b, omega: float, measures,
                     enumeration: list[tuple[Trajectory, float]] | None = None) -> float:
    """Regularized Lagrangian assembled from exact risk values.

    ``measures`` has one entry per cost index 0..U; ``eta`` likewise; ``lam``
    and ``b`` cover constraint indices 1..U only.
    """
    lam = np.asarray(lam, dtype=float)
    b = np.asarray(b, dtype=float)
    eta = np.asarray(eta, dtype=float)
    enumeration = enumeration or enumerate_trajectories(cmdp, policy)
    value = exact_risk_J(cmdp, policy, measures[0], float(eta[0]), 0, enumeration)
    for u in range(1, len(measures)):
        j_u = exact_risk_J(cmdp, policy, measures[u], float(eta[u]), u, enumeration)
        value += lam[u - 1] * (j_u - b[u - 1])
    return float(value - 0.5 * omega * lam @ lam)


def fd_gradient(scalar_fn, point, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a flat vector."""
    if h <= 0:
        raise ValidationError("h must be positive")
    point = np.asarray(point, dtype=float)
    grad = np.empty_like(point)
    for i in range(point.size):
        shift = np.zeros_like(point)
        shift[i] = h
        hi = scalar_fn(point + shift)
        lo = scalar_fn(point - shift)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValidationError("scalar_fn returned a non-finite value")
        grad[i] = (hi - lo) / (2.0 * h)
    return grad


def estimator_expectation(cmdp: TabularCmdp, policy, estimator_fn,
                          enumeration: list[tuple[Trajectory, float]] | None = None
                          ) -> np.ndarray:
    """Exact expectation of a single-trajectory estimator: sum_tau p(tau) est(tau)."""
    enumeration = enumeration or enumerate_trajectories(cmdp, policy)
    total = None
    for traj, p in enumeration:
        term = p * np.asarray(estimator_fn(traj), dtype=float)
        total = term if total is None else total + term
    return total


def grid_search(objective_fn, box, resolution: float, mode: str = "max",
                vectorized: bool = True, chunk: int = 262144) -> tuple[np.ndarray, float]:
    """Exhaustive optimization over an axis-aligned grid.

    ``box`` is a sequence of (lo, hi) pairs, at most 3 of them.  When
    ``vectorized`` the objective must accept an (n, d) array and return (n,);
    otherwise it is called point by point.  Returns (argopt, value).
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    if not 1 <= len(box) <= 3:
        raise ValidationError("grid_search boxes must have 1 to 3 dimensions")
    if resolution <= 0:
        raise ValidationError("resolution must be positive")
    if mode not in ("max", "min"):
        raise ValidationError("mode must be 'max' or 'min'")
    axes = [np.arange(lo, hi + resolution / 2, resolution) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    best_val = -np.inf if mode == "max" else np.inf
    best_arg = points[0]
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        if vectorized:
            vals = np.asarray(objective_fn(block), dtype=float)
        else:
            vals = np.array([objective_fn(p) for p in block], dtype=float)
        idx = int(np.argmax(vals)) if mode == "max" else int(np.argmin(vals))
        if (mode == "max" and vals[idx] > best_val) or (mode == "min" and vals[idx] < best_val):
            best_val = float(vals[idx])
            best_arg = block[idx]
    return best_arg.copy(), best_val


def random_tabular_cmdp(rng: np.random.Generator, n_states: int = 3, n_actions: int = 2,
                        num_constraints: int = 1, gamma: float = 0.9, horizon: int = 3
                        ) -> TabularCmdp:
    """Generic random instance for property tests."""
    transition = rng.random((n_states, n_actions, n_states)) + 0.1
    transition /= transition.sum(axis=2, keepdims=True)
    reward = -rng.random((n_states, n_actions))
    costs = rng.random((num_constraints, n_states, n_actions))
    mu0 = rng.random(n_states) + 0.1
    mu0 /= mu0.sum()
    return TabularCmdp(transition, reward, costs, mu0, gamma, horizon)

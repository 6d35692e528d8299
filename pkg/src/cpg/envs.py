"""Environment contract, trajectory bookkeeping, and the native environments.

Environments are functional state machines: ``initial_state(rng)`` draws a
start state and ``step(state, action, rng)`` returns a :class:`StepOutcome`.
No hidden mutable state, so instances are safe to share across rollout
workers; each worker only needs its own rng substream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import ConfigurationError, ValidationError


@dataclass(frozen=True)
class Discrete:
    n_actions: int


@dataclass(frozen=True)
class Continuous:
    action_dim: int


@dataclass(frozen=True)
class EnvDescriptor:
    """Static facts about an environment: spaces, constraint count and
    thresholds, discounting, and horizon."""

    state_dim: int
    action_kind: Discrete | Continuous
    num_constraints: int
    thresholds: tuple[float, ...]
    gamma: float
    horizon: int | None  # None means infinite (requires gamma < 1)

    def __post_init__(self):
        if self.state_dim < 1:
            raise ConfigurationError("state_dim must be positive")
        if self.num_constraints < 0:
            raise ConfigurationError("num_constraints must be nonnegative")
        if len(self.thresholds) != self.num_constraints:
            raise ConfigurationError("thresholds length must equal num_constraints")
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigurationError("gamma must lie in [0, 1]")
        if self.horizon is None:
            if self.gamma >= 1.0:
                raise ConfigurationError("infinite horizon requires gamma < 1")
        elif self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        jm = self.j_max
        for b in self.thresholds:
            if not (0.0 <= b <= jm):
                raise ConfigurationError(f"threshold {b} outside [0, {jm}]")

    @property
    def j_max(self) -> float:
        """Largest attainable discounted cumulative cost."""
        if self.horizon is None:
            return 1.0 / (1.0 - self.gamma)
        if self.gamma == 1.0:
            return float(self.horizon)
        return (1.0 - self.gamma**self.horizon) / (1.0 - self.gamma)


@dataclass(frozen=True)
class StepOutcome:
    next_state: object
    reward: float
    costs: np.ndarray
    terminal: bool


@dataclass
class Trajectory:
    """One rollout: per-step states, actions, rewards, and per-constraint costs.

    ``sampled_theta`` is set only on rollouts driven by a parameter sampled
    from a hyperpolicy.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray  # (T, U)
    sampled_theta: np.ndarray | None = None

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.costs = np.atleast_2d(np.asarray(self.costs, dtype=float))
        t = len(self.rewards)
        if self.costs.shape[0] != t and self.costs.size > 0:
            raise ValidationError("costs must have one row per step")
        if len(self.states) != t or len(self.actions) != t:
            raise ValidationError("states, actions, rewards must have equal length")

    def __len__(self) -> int:
        return len(self.rewards)

    @property
    def num_constraints(self) -> int:
        return self.costs.shape[1] if self.costs.size else 0


def discounted_return(traj: Trajectory, gamma: float) -> float:
    """R(tau) = sum_t gamma^t r_t."""
    t = len(traj)
    if t == 0:
        raise ValidationError("trajectory is empty")
    return float(gamma ** np.arange(t) @ traj.rewards)


def discounted_cost(traj: Trajectory, i: int, gamma: float) -> float:
    """C_i(tau) = sum_t gamma^t c_{t,i}; index 0 is the reward flipped in sign."""
    t = len(traj)
    if t == 0:
        raise ValidationError("trajectory is empty")
    if i == 0:
        return -discounted_return(traj, gamma)
    if not (1 <= i <= traj.num_constraints):
        raise IndexError(f"cost index {i} outside [0, {traj.num_constraints}]")
    return float(gamma ** np.arange(t) @ traj.costs[:, i - 1])


def per_step_mean_cost(traj: Trajectory, i: int) -> float:
    """Undiscounted mean of the i-th per-step cost over the realized length."""
    t = len(traj)
    if t == 0:
        raise ValidationError("trajectory is empty")
    if i == 0:
        return float(-traj.rewards.mean())
    if not (1 <= i <= traj.num_constraints):
        raise IndexError(f"cost index {i} outside [0, {traj.num_constraints}]")
    return float(traj.costs[:, i - 1].mean())


def _act(actor, state, rng):
    if hasattr(actor, "act"):
        return actor.act(state, rng)
    return actor(state, rng)


def rollout(env, actor, horizon: int, rng: np.random.Generator,
            sampled_theta: np.ndarray | None = None) -> Trajectory:
    """Play ``actor`` in ``env`` for at most ``horizon`` steps.

    Deterministic given the rng state; stops early when the environment
    reports a terminal transition.
    """
    if env.descriptor.horizon is not None and horizon > env.descriptor.horizon:
        raise ValidationError("rollout horizon exceeds the environment horizon")
    state = env.initial_state(rng)
    states, actions, rewards, costs = [], [], [], []
    for _ in range(horizon):
        action = _act(actor, state, rng)
        outcome = env.step(state, action, rng)
        states.append(state)
        actions.append(action)
        rewards.append(outcome.reward)
        costs.append(outcome.costs)
        state = outcome.next_state
        if outcome.terminal:
            break
    u = env.descriptor.num_constraints
    return Trajectory(
        states=np.asarray(states),
        actions=np.asarray(actions),
        rewards=np.asarray(rewards, dtype=float),
        costs=np.asarray(costs, dtype=float).reshape(len(rewards), u),
        sampled_theta=sampled_theta,
    )


def collect_batch(env, actor, n: int, horizon: int, rng: np.random.Generator) -> list[Trajectory]:
    """Collect ``n`` rollouts, using the environment's vectorized path when
    both sides support it.  Trajectory order is fixed by index either way."""
    if hasattr(env, "rollout_batch") and hasattr(actor, "act_batch"):
        return env.rollout_batch(actor, n, horizon, rng)
    return [rollout(env, actor, horizon, rng) for _ in range(n)]


class WalledGridworld:
    """Square grid with a U-shaped cost wall around the center goal (DGWW).

    The agent starts uniformly at one of the four corners and plays
    up/right/left/down; moves off the board are clamped.  Landing on a cell
    earns reward minus its Manhattan distance to the center divided by the
    corner distance (0 at the center), and cost 1 when the cell belongs to
    the wall.  The wall is the 8-neighborhood ring around the center minus
    the cell directly above it, leaving the opening on the top side.
    Episodes terminate on reaching the center.
    """

    N_ACTIONS = 4  # up, right, left, down
    _MOVES = ((-1, 0), (0, 1), (0, -1), (1, 0))

    def __init__(self, side_length: int = 7, horizon: int = 100, gamma: float = 1.0,
                 threshold: float = 0.2):
        side_length = int(side_length)
        if side_length < 5 or side_length % 2 == 0:
            raise ConfigurationError("side_length must be odd and >= 5")
        self.side = side_length
        self.center = (side_length // 2, side_length // 2)
        cr, cc = self.center
        self.wall = {
            (cr + dr, cc + dc)
            for dr in (-1, 0, 1)
            for dc in (-1, 0, 1)
            if (dr, dc) != (0, 0) and (dr, dc) != (-1, 0)
        }
        self._max_dist = float(abs(cr) + abs(cc))  # corner (0, 0) is farthest
        self._corners = [
            0,
            side_length - 1,
            (side_length - 1) * side_length,
            side_length * side_length - 1,
        ]
        self.descriptor = EnvDescriptor(
            state_dim=1,
            action_kind=Discrete(self.N_ACTIONS),
            num_constraints=1,
            thresholds=(float(threshold),),
            gamma=float(gamma),
            horizon=int(horizon),
        )

    @property
    def n_states(self) -> int:
        return self.side * self.side

    def state_index(self, row: int, col: int) -> int:
        return row * self.side + col

    def cell(self, state: int) -> tuple[int, int]:
        return divmod(int(state), self.side)

    def initial_state(self, rng: np.random.Generator) -> int:
        return self._corners[rng.integers(len(self._corners))]

    def step(self, state: int, action: int, rng=None) -> StepOutcome:
        action = int(action)
        if not 0 <= action < self.N_ACTIONS:
            raise ValidationError(f"action {action} outside [0, {self.N_ACTIONS})")
        row, col = self.cell(state)
        dr, dc = self._MOVES[action]
        row = min(max(row + dr, 0), self.side - 1)
        col = min(max(col + dc, 0), self.side - 1)
        dist = abs(row - self.center[0]) + abs(col - self.center[1])
        reward = -dist / self._max_dist
        cost = 1.0 if (row, col) in self.wall else 0.0
        terminal = (row, col) == self.center
        return StepOutcome(self.state_index(row, col), reward, np.array([cost]), terminal)


class CostLqr:
    """Linear dynamics with a state-quadratic reward and action-quadratic cost.

    s' = A s + B a, reward -s^T R s, single cost a^T Q a, initial state
    uniform on [init_low, init_high]^d.  Raw quadratics can leave the
    nominal [-1, 0] / [0, 1] ranges; optional ``reward_scale``/``cost_scale``
    divide and clip them back in.  With both scales unset the raw values are
    reported and the range invariants are treated as soft.
    """

    _DEFAULT_A = 0.9 * np.eye(2)
    _DEFAULT_Q = np.diag([0.9, 0.1])
    _DEFAULT_R = np.diag([0.1, 0.9])

    def __init__(self, a_mat=None, b_mat=None, q=None, r=None,
                 init_low: float = -3.0, init_high: float = 3.0,
                 horizon: int = 50, gamma: float = 1.0, threshold: float = 0.2,
                 reward_scale: float | None = None, cost_scale: float | None = None):
        self.a_mat = np.asarray(a_mat, dtype=float) if a_mat is not None else self._DEFAULT_A.copy()
        if self.a_mat.ndim != 2 or self.a_mat.shape[0] != self.a_mat.shape[1]:
            raise ConfigurationError("A must be square")
        d = self.a_mat.shape[0]
        self.b_mat = np.asarray(b_mat, dtype=float) if b_mat is not None else 0.9 * np.eye(d)
        if self.b_mat.ndim != 2 or self.b_mat.shape[0] != d:
            raise ConfigurationError("B must have one row per state dimension")
        da = self.b_mat.shape[1]
        self.q = np.asarray(q, dtype=float) if q is not None else self._DEFAULT_Q.copy()
        if self.q.shape != (da, da):
            raise ConfigurationError(f"Q must have shape {(da, da)}, got {self.q.shape}")
        self.r = np.asarray(r, dtype=float) if r is not None else self._DEFAULT_R.copy()
        if self.r.shape != (d, d):
            raise ConfigurationError(f"R must have shape {(d, d)}, got {self.r.shape}")
        if init_low >= init_high:
            raise ConfigurationError("init_low must be below init_high")
        self.init_low = float(init_low)
        self.init_high = float(init_high)
        self.reward_scale = None if reward_scale is None else float(reward_scale)
        self.cost_scale = None if cost_scale is None else float(cost_scale)
        self.descriptor = EnvDescriptor(
            state_dim=d,
            action_kind=Continuous(da),
            num_constraints=1,
            thresholds=(float(threshold),),
            gamma=float(gamma),
            horizon=int(horizon),
        )

    def _normalize_reward(self, raw):
        if self.reward_scale is None:
            return raw
        return np.clip(raw / self.reward_scale, -1.0, 0.0)

    def _normalize_cost(self, raw):
        if self.cost_scale is None:
            return raw
        return np.clip(raw / self.cost_scale, 0.0, 1.0)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.init_low, self.init_high, size=self.descriptor.state_dim)

    def step(self, state, action, rng=None) -> StepOutcome:
        state = np.asarray(state, dtype=float)
        action = np.asarray(action, dtype=float).reshape(-1)
        if action.shape[0] != self.b_mat.shape[1]:
            raise ValidationError(
                f"action dimension {action.shape[0]} does not match {self.b_mat.shape[1]}"
            )
        reward = self._normalize_reward(-float(state @ self.r @ state))
        cost = self._normalize_cost(float(action @ self.q @ action))
        next_state = self.a_mat @ state + self.b_mat @ action
        return StepOutcome(next_state, float(reward), np.array([cost]), False)

    def rollout_batch(self, actor, n: int, horizon: int, rng: np.random.Generator,
                      sampled_thetas: np.ndarray | None = None) -> list[Trajectory]:
        """Vectorized rollouts for actors exposing ``act_batch``.

        All trajectories evolve in lockstep (fixed horizon, no termination),
        so the batch stacks into dense (T, n, .) arrays before being split
        back into per-trajectory views in index order.
        """
        if self.descriptor.horizon is not None and horizon > self.descriptor.horizon:
            raise ValidationError("rollout horizon exceeds the environment horizon")
        d = self.descriptor.state_dim
        states = rng.uniform(self.init_low, self.init_high, size=(n, d))
        all_states = np.empty((horizon, n, d))
        all_actions = np.empty((horizon, n, self.b_mat.shape[1]))
        all_rewards = np.empty((horizon, n))
        all_costs = np.empty((horizon, n))
        for t in range(horizon):
            actions = actor.act_batch(states, rng)
            all_states[t] = states
            all_actions[t] = actions
            all_rewards[t] = self._normalize_reward(-np.einsum("ns,st,nt->n", states, self.r, states))
            all_costs[t] = self._normalize_cost(np.einsum("na,ab,nb->n", actions, self.q, actions))
            states = states @ self.a_mat.T + actions @ self.b_mat.T
        out = []
        for j in range(n):
            out.append(
                Trajectory(
                    states=all_states[:, j].copy(),
                    actions=all_actions[:, j].copy(),
                    rewards=all_rewards[:, j].copy(),
                    costs=all_costs[:, j, None].copy(),
                    sampled_theta=None if sampled_thetas is None else sampled_thetas[j],
                )
            )
        return out


class ClippedActionCost:
    """Wrapper charging the L2 overshoot of out-of-bounds actions as an extra
    cost component, then forwarding the clipped action to the inner env."""

    def __init__(self, env, a_min, a_max, threshold: float = 0.0, cost_scale: float | None = None):
        inner = env.descriptor
        if not isinstance(inner.action_kind, Continuous):
            raise ConfigurationError("clipped-action cost requires a continuous-action env")
        da = inner.action_kind.action_dim
        self.a_min = np.broadcast_to(np.asarray(a_min, dtype=float), (da,)).copy()
        self.a_max = np.broadcast_to(np.asarray(a_max, dtype=float), (da,)).copy()
        if np.any(self.a_min >= self.a_max):
            raise ConfigurationError("a_min must be componentwise below a_max")
        self.env = env
        self.cost_scale = None if cost_scale is None else float(cost_scale)
        self.descriptor = EnvDescriptor(
            state_dim=inner.state_dim,
            action_kind=inner.action_kind,
            num_constraints=inner.num_constraints + 1,
            thresholds=inner.thresholds + (float(threshold),),
            gamma=inner.gamma,
            horizon=inner.horizon,
        )

    def initial_state(self, rng):
        return self.env.initial_state(rng)

    def step(self, state, action, rng=None) -> StepOutcome:
        action = np.asarray(action, dtype=float).reshape(-1)
        clipped = np.clip(action, self.a_min, self.a_max)
        extra = float(np.linalg.norm(action - clipped))
        if self.cost_scale is not None:
            extra = float(np.clip(extra / self.cost_scale, 0.0, 1.0))
        outcome = self.env.step(state, clipped, rng)
        return StepOutcome(
            outcome.next_state,
            outcome.reward,
            np.append(outcome.costs, extra),
            outcome.terminal,
        )

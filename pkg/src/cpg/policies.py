"""Parametric policies and hyperpolicies with score functions.

Every stochastic policy exposes ``act`` plus the gradient of its log-density
with respect to the flattened parameters (the score).  Flattening is row-major:
(state, action) for the tabular softmax, (action_out, state_in) for linear
maps, so optimizer moments line up across runs.
"""

from __future__ import annotations

import numpy as np

from .validation import ConfigurationError, check_positive


class TabularSoftmaxPolicy:
    """Softmax over per-(state, action) logits with temperature.

    pi(a | s) = exp(theta[s, a] / tau) / sum_z exp(theta[s, z] / tau).
    States are integer indices.  The probability table is cached and refreshed
    whenever the flat parameters are assigned.
    """

    def __init__(self, n_states: int, n_actions: int, theta=None, temperature: float = 1.0):
        self.n_states = int(n_states)
        self.n_actions = int(n_actions)
        if self.n_states < 1 or self.n_actions < 1:
            raise ConfigurationError("n_states and n_actions must be positive")
        self.temperature = check_positive("temperature", temperature)
        if theta is None:
            theta = np.zeros((self.n_states, self.n_actions))
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_states, self.n_actions):
            raise ConfigurationError(
                f"theta must have shape {(self.n_states, self.n_actions)}, got {theta.shape}"
            )
        self._theta = theta.copy()
        self._refresh()

    def _refresh(self):
        logits = self._theta / self.temperature
        logits = logits - logits.max(axis=1, keepdims=True)  # overflow guard
        expl = np.exp(logits)
        self._probs = expl / expl.sum(axis=1, keepdims=True)
        self._cumprobs = np.cumsum(self._probs, axis=1)

    @property
    def theta(self) -> np.ndarray:
        return self._theta.copy()

    @property
    def num_params(self) -> int:
        return self.n_states * self.n_actions

    def get_flat(self) -> np.ndarray:
        return self._theta.ravel().copy()

    def set_flat(self, flat):
        self._theta = np.asarray(flat, dtype=float).reshape(self.n_states, self.n_actions).copy()
        self._refresh()

    def action_probs(self, state: int) -> np.ndarray:
        return self._probs[int(state)].copy()

    def act(self, state: int, rng: np.random.Generator) -> int:
        row = self._cumprobs[int(state)]
        return int(np.searchsorted(row, rng.random(), side="right"))

    def log_prob(self, state: int, action: int) -> float:
        return float(np.log(self._probs[int(state), int(action)]))

    def score(self, state: int, action: int) -> np.ndarray:
        """d log pi(a|s) / d theta, flattened row-major over (state, action)."""
        grad = np.zeros((self.n_states, self.n_actions))
        s, a = int(state), int(action)
        grad[s] = -self._probs[s] / self.temperature
        grad[s, a] += 1.0 / self.temperature
        return grad.ravel()

    def score_weighted_sum(self, states, actions, weights) -> np.ndarray:
        """sum_t weights[t] * score(states[t], actions[t]), computed sparsely."""
        states = np.asarray(states, dtype=int)
        actions = np.asarray(actions, dtype=int)
        weights = np.asarray(weights, dtype=float)
        grad = np.zeros((self.n_states, self.n_actions))
        np.add.at(grad, (states, actions), weights / self.temperature)
        np.subtract.at(grad, states, self._probs[states] * (weights / self.temperature)[:, None])
        return grad.ravel()


class LinearGaussianPolicy:
    """a ~ N(theta @ s, sigma2 * I) for a (action_dim, state_dim) gain matrix."""

    def __init__(self, theta, sigma2: float):
        self.theta = np.atleast_2d(np.asarray(theta, dtype=float)).copy()
        self.sigma2 = check_positive("sigma2", sigma2)
        self.action_dim, self.state_dim = self.theta.shape

    @classmethod
    def zeros(cls, action_dim: int, state_dim: int, sigma2: float) -> "LinearGaussianPolicy":
        return cls(np.zeros((action_dim, state_dim)), sigma2)

    @property
    def num_params(self) -> int:
        return self.theta.size

    def get_flat(self) -> np.ndarray:
        return self.theta.ravel().copy()

    def set_flat(self, flat):
        self.theta = np.asarray(flat, dtype=float).reshape(self.theta.shape).copy()

    def mean_action(self, state) -> np.ndarray:
        return self.theta @ np.asarray(state, dtype=float)

    def act(self, state, rng: np.random.Generator) -> np.ndarray:
        return self.mean_action(state) + np.sqrt(self.sigma2) * rng.standard_normal(self.action_dim)

    def act_batch(self, states, rng: np.random.Generator) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        noise = np.sqrt(self.sigma2) * rng.standard_normal((states.shape[0], self.action_dim))
        return states @ self.theta.T + noise

    def log_prob(self, state, action) -> float:
        resid = np.asarray(action, dtype=float) - self.mean_action(state)
        return float(
            -0.5 * resid @ resid / self.sigma2
            - 0.5 * self.action_dim * np.log(2.0 * np.pi * self.sigma2)
        )

    def score(self, state, action) -> np.ndarray:
        """(a - theta s) s^T / sigma2, flattened row-major (action_out, state_in)."""
        state = np.asarray(state, dtype=float)
        resid = np.asarray(action, dtype=float).reshape(self.action_dim) - self.theta @ state
        return np.outer(resid, state).ravel() / self.sigma2

    def score_weighted_sum(self, states, actions, weights) -> np.ndarray:
        states = np.asarray(states, dtype=float).reshape(-1, self.state_dim)
        actions = np.asarray(actions, dtype=float).reshape(-1, self.action_dim)
        weights = np.asarray(weights, dtype=float)
        resid = actions - states @ self.theta.T
        return np.einsum("t,ta,ts->as", weights, resid, states).ravel() / self.sigma2


class LinearDeterministicPolicy:
    """a = theta @ s exactly; no randomness, hence no score."""

    def __init__(self, theta):
        self.theta = np.atleast_2d(np.asarray(theta, dtype=float)).copy()
        self.action_dim, self.state_dim = self.theta.shape

    @property
    def num_params(self) -> int:
        return self.theta.size

    def get_flat(self) -> np.ndarray:
        return self.theta.ravel().copy()

    def set_flat(self, flat):
        self.theta = np.asarray(flat, dtype=float).reshape(self.theta.shape).copy()

    def act(self, state, rng=None) -> np.ndarray:
        return self.theta @ np.asarray(state, dtype=float)

    def score(self, state, action):
        raise TypeError("deterministic policies have no score function")


class LinearPolicyStack:
    """Batch view over n independent linear-deterministic policies.

    Used by vectorized rollouts in parameter-based mode where trajectory j is
    driven by its own sampled gain matrix.
    """

    def __init__(self, thetas):
        self.thetas = np.asarray(thetas, dtype=float)
        if self.thetas.ndim != 3:
            raise ConfigurationError("thetas must have shape (n, action_dim, state_dim)")

    def act_batch(self, states, rng=None) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        return np.einsum("nas,ns->na", self.thetas, states)


class GaussianHyperpolicy:
    """theta ~ N(rho, sigma2 * I) over a flat policy-parameter space."""

    def __init__(self, rho, sigma2: float):
        self.rho = np.asarray(rho, dtype=float).ravel().copy()
        self.sigma2 = check_positive("sigma2", sigma2)

    @property
    def dim(self) -> int:
        return self.rho.size

    @property
    def num_params(self) -> int:
        return self.rho.size

    def get_flat(self) -> np.ndarray:
        return self.rho.copy()

    def set_flat(self, flat):
        self.rho = np.asarray(flat, dtype=float).ravel().copy()

    def sample_theta(self, rng: np.random.Generator) -> np.ndarray:
        return self.rho + np.sqrt(self.sigma2) * rng.standard_normal(self.dim)

    def sample_thetas(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.rho[None, :] + np.sqrt(self.sigma2) * rng.standard_normal((n, self.dim))

    def log_density(self, theta) -> float:
        diff = np.asarray(theta, dtype=float).ravel() - self.rho
        return float(
            -0.5 * diff @ diff / self.sigma2 - 0.5 * self.dim * np.log(2.0 * np.pi * self.sigma2)
        )

    def score(self, theta) -> np.ndarray:
        """d log nu(theta) / d rho = (theta - rho) / sigma2."""
        return (np.asarray(theta, dtype=float).ravel() - self.rho) / self.sigma2

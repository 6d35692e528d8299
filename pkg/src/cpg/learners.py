"""Scikit-learn style front end for the primal-dual solvers.

``CPGAE`` (action-based) and ``CPGPE`` (parameter-based) follow the estimator
protocol: hyperparameters in ``__init__``, ``fit(env)`` to run the solver,
fitted attributes with trailing underscores, and ``get_params``/``set_params``
via ``BaseEstimator`` so they clone and sweep like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .envs import Continuous, Discrete
from .estimators import ConstrainedObjective, expected_cost_objective
from .policies import (
    GaussianHyperpolicy,
    LinearDeterministicPolicy,
    LinearGaussianPolicy,
    TabularSoftmaxPolicy,
)
from .solver import (
    FULL_BATCH_ALTERNATE,
    AdamSchedule,
    ConstantSchedule,
    SolverConfig,
    run_cpgae,
    run_cpgpe,
)
from .validation import ConfigurationError


def _make_schedule(kind: str, value: float):
    if kind == "constant":
        return ConstantSchedule(value)
    if kind == "adam":
        return AdamSchedule(value)
    raise ConfigurationError(f"unknown schedule kind {kind!r}")


def _resolve_objective(env, objective, aggregation: str) -> ConstrainedObjective:
    if objective is not None:
        return objective
    descriptor = env.descriptor
    aggregations = ("discounted_sum",) + (aggregation,) * descriptor.num_constraints
    return expected_cost_objective(descriptor.thresholds, descriptor.gamma, aggregations)


def _default_policy(env, sigma2: float, temperature: float):
    kind = env.descriptor.action_kind
    if isinstance(kind, Discrete):
        if not hasattr(env, "n_states"):
            raise ConfigurationError("discrete-action environments must expose n_states")
        return TabularSoftmaxPolicy(env.n_states, kind.n_actions, temperature=temperature)
    return LinearGaussianPolicy.zeros(kind.action_dim, env.descriptor.state_dim, sigma2)


class _CPGBase(BaseEstimator):
    def __init__(self, omega=1e-4, iterations=100, batch_size=10,
                 primal_step=0.01, dual_step=0.1, eta_step=0.01,
                 schedule="constant", batching=FULL_BATCH_ALTERNATE,
                 conservative_offset=0.0, force_reinforce=False,
                 objective=None, aggregation="discounted_sum",
                 sigma2=1e-3, temperature=1.0, seed=0):
        self.omega = omega
        self.iterations = iterations
        self.batch_size = batch_size
        self.primal_step = primal_step
        self.dual_step = dual_step
        self.eta_step = eta_step
        self.schedule = schedule
        self.batching = batching
        self.conservative_offset = conservative_offset
        self.force_reinforce = force_reinforce
        self.objective = objective
        self.aggregation = aggregation
        self.sigma2 = sigma2
        self.temperature = temperature
        self.seed = seed

    def _solver_config(self) -> SolverConfig:
        return SolverConfig(
            omega=self.omega,
            iterations=self.iterations,
            batch_size=self.batch_size,
            primal_schedule=_make_schedule(self.schedule, self.primal_step),
            dual_schedule=_make_schedule(self.schedule, self.dual_step),
            eta_schedule=_make_schedule(self.schedule, self.eta_step),
            batching=self.batching,
            conservative_offset=self.conservative_offset,
            seed=self.seed,
            force_reinforce=self.force_reinforce,
        )


class CPGAE(_CPGBase):
    """Action-based constrained policy-gradient learner.

    ``fit(env)`` builds a stochastic policy matched to the environment's
    action space (tabular softmax for discrete actions, linear Gaussian with
    variance ``sigma2`` for continuous ones) and runs the alternating
    primal-dual loop.  Fitted attributes: ``policy_``, ``lambda_``, ``eta_``,
    ``state_``, ``log_``.
    """

    def fit(self, env, policy=None):
        objective = _resolve_objective(env, self.objective, self.aggregation)
        self.policy_ = policy if policy is not None else _default_policy(
            env, self.sigma2, self.temperature
        )
        self.state_, self.log_ = run_cpgae(env, self.policy_, objective, self._solver_config())
        self.lambda_ = self.state_.lam
        self.eta_ = self.state_.eta
        return self

    def predict(self, states):
        """Greedy action per state: the mode of the learned policy."""
        policy = self.policy_
        if isinstance(policy, TabularSoftmaxPolicy):
            return np.array([int(np.argmax(policy.action_probs(s))) for s in states])
        return np.array([policy.mean_action(s) for s in states])


class CPGPE(_CPGBase):
    """Parameter-based constrained policy-gradient learner.

    ``fit(env)`` builds a Gaussian hyperpolicy (variance ``sigma2``) over the
    flat parameters of a deterministic inner policy: linear for continuous
    actions, softmax for discrete ones.  Fitted attributes: ``hyperpolicy_``,
    ``lambda_``, ``eta_``, ``state_``, ``log_``.
    """

    def fit(self, env, hyperpolicy=None, build_policy=None):
        objective = _resolve_objective(env, self.objective, self.aggregation)
        descriptor = env.descriptor
        if hyperpolicy is None:
            kind = descriptor.action_kind
            if isinstance(kind, Continuous):
                shape = (kind.action_dim, descriptor.state_dim)
                hyperpolicy = GaussianHyperpolicy(np.zeros(shape).ravel(), self.sigma2)
                build_policy = lambda theta: LinearDeterministicPolicy(theta.reshape(shape))
            else:
                if not hasattr(env, "n_states"):
                    raise ConfigurationError("discrete-action environments must expose n_states")
                shape = (env.n_states, kind.n_actions)
                temperature = self.temperature
                hyperpolicy = GaussianHyperpolicy(np.zeros(shape).ravel(), self.sigma2)
                build_policy = lambda theta: TabularSoftmaxPolicy(
                    shape[0], shape[1], theta.reshape(shape), temperature
                )
        elif build_policy is None:
            raise ConfigurationError("a custom hyperpolicy needs a build_policy callable")
        self.hyperpolicy_ = hyperpolicy
        self.build_policy_ = build_policy
        self.state_, self.log_ = run_cpgpe(
            env, hyperpolicy, build_policy, objective, self._solver_config()
        )
        self.lambda_ = self.state_.lam
        self.eta_ = self.state_.eta
        return self

    def predict(self, states):
        """Action of the inner policy built at the hyperpolicy mean."""
        policy = self.build_policy_(self.hyperpolicy_.get_flat())
        if isinstance(policy, TabularSoftmaxPolicy):
            return np.array([int(np.argmax(policy.action_probs(s))) for s in states])
        return np.array([policy.act(s) for s in states])

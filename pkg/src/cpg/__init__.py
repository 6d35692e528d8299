"""Primal-dual policy-gradient solvers for risk-constrained MDPs."""

from .envs import (
    ClippedActionCost,
    Continuous,
    CostLqr,
    Discrete,
    EnvDescriptor,
    StepOutcome,
    Trajectory,
    WalledGridworld,
    collect_batch,
    discounted_cost,
    discounted_return,
    per_step_mean_cost,
    rollout,
)
from .estimators import (
    Batch,
    ConstrainedObjective,
    dual_gradient,
    eta_gradient,
    expected_cost_objective,
    lagrangian_value,
    primal_gradient_gpomdp,
    primal_gradient_pb,
    primal_gradient_reinforce,
    risk_values,
)
from .learners import CPGAE, CPGPE
from .policies import (
    GaussianHyperpolicy,
    LinearDeterministicPolicy,
    LinearGaussianPolicy,
    TabularSoftmaxPolicy,
)
from .risk import RiskMeasure, exact_measure
from .solver import (
    AdamSchedule,
    ConstantSchedule,
    PrimalDualState,
    RunLog,
    SolverConfig,
    SolverDivergenceError,
    h_omega_closed_form,
    lambda_star_closed_form,
    potential_diag,
    project_lambda,
    run_cpgae,
    run_cpgpe,
)
from .validation import ConfigurationError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "CPGAE",
    "CPGPE",
    "AdamSchedule",
    "Batch",
    "ClippedActionCost",
    "ConfigurationError",
    "ConstantSchedule",
    "ConstrainedObjective",
    "Continuous",
    "CostLqr",
    "Discrete",
    "EnvDescriptor",
    "GaussianHyperpolicy",
    "LinearDeterministicPolicy",
    "LinearGaussianPolicy",
    "PrimalDualState",
    "RiskMeasure",
    "RunLog",
    "SolverConfig",
    "SolverDivergenceError",
    "StepOutcome",
    "TabularSoftmaxPolicy",
    "Trajectory",
    "ValidationError",
    "WalledGridworld",
    "collect_batch",
    "discounted_cost",
    "discounted_return",
    "dual_gradient",
    "eta_gradient",
    "exact_measure",
    "expected_cost_objective",
    "h_omega_closed_form",
    "lagrangian_value",
    "lambda_star_closed_form",
    "per_step_mean_cost",
    "potential_diag",
    "primal_gradient_gpomdp",
    "primal_gradient_pb",
    "primal_gradient_reinforce",
    "project_lambda",
    "risk_values",
    "rollout",
    "run_cpgae",
    "run_cpgpe",
]

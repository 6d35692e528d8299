"""Fast oracle cross-check suite behind ``cpg verify``.

Each check recomputes a library quantity with an independent method
(enumeration, finite differences, grid search) and prints one PASS/FAIL line.
The suite is a smoke-level subset of the test suite, sized to run in seconds.
"""

from __future__ import annotations

import numpy as np

from ..envs import rollout
from ..estimators import (
    Batch,
    dual_gradient,
    eta_gradient,
    expected_cost_objective,
    primal_gradient_gpomdp,
    primal_gradient_reinforce,
)
from ..oracle import (
    enumerate_trajectories,
    estimator_expectation,
    exact_lagrangian,
    fd_gradient,
    grid_search,
    random_tabular_cmdp,
)
from ..policies import GaussianHyperpolicy, LinearGaussianPolicy, TabularSoftmaxPolicy
from ..risk import RiskMeasure, exact_measure
from ..solver import h_omega_closed_form, lambda_star_closed_form, project_lambda


def _check_scores(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(20):
        policy = TabularSoftmaxPolicy(3, 3, theta=rng.standard_normal((3, 3)),
                                      temperature=float(rng.uniform(0.5, 2.0)))
        s = int(rng.integers(3))
        a = int(rng.integers(3))
        fd = fd_gradient(lambda th: TabularSoftmaxPolicy(
            3, 3, th.reshape(3, 3), policy.temperature).log_prob(s, a), policy.get_flat())
        worst = max(worst, float(np.abs(policy.score(s, a) - fd).max()))
        lin = LinearGaussianPolicy(rng.standard_normal((2, 3)), float(rng.uniform(0.2, 2.0)))
        state = rng.standard_normal(3)
        action = rng.standard_normal(2)
        fd = fd_gradient(lambda th: LinearGaussianPolicy(
            th.reshape(2, 3), lin.sigma2).log_prob(state, action), lin.get_flat())
        worst = max(worst, float(np.abs(lin.score(state, action) - fd).max()))
        hyper = GaussianHyperpolicy(rng.standard_normal(3), float(rng.uniform(0.2, 2.0)))
        theta = rng.standard_normal(3)
        fd = fd_gradient(lambda rho: GaussianHyperpolicy(
            rho, hyper.sigma2).log_density(theta), hyper.get_flat())
        worst = max(worst, float(np.abs(hyper.score(theta) - fd).max()))
    return worst < 1e-5, f"max |score - fd| = {worst:.2e}"


def _check_enumeration(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        cmdp = random_tabular_cmdp(rng, horizon=int(rng.integers(2, 4)))
        policy = TabularSoftmaxPolicy(cmdp.n_states, cmdp.n_actions,
                                      theta=rng.standard_normal((cmdp.n_states, cmdp.n_actions)))
        total = sum(p for _, p in enumerate_trajectories(cmdp, policy))
        worst = max(worst, abs(total - 1.0))
    return worst < 1e-10, f"max |sum p - 1| = {worst:.2e}"


def _check_estimators(rng) -> tuple[bool, str]:
    cmdp = random_tabular_cmdp(rng)
    policy = TabularSoftmaxPolicy(3, 2, theta=rng.standard_normal((3, 2)))
    objective = expected_cost_objective([0.3], cmdp.gamma)
    measures = (RiskMeasure.expected_cost(), RiskMeasure.cvar(0.8))
    risk_objective = objective.__class__(measures, objective.thresholds, cmdp.gamma)
    lam = np.array([0.6])
    eta = np.array([0.0, 1.1])
    omega = 0.05
    enum = enumerate_trajectories(cmdp, policy)

    def lag(flat):
        p = TabularSoftmaxPolicy(3, 2, flat.reshape(3, 2))
        return exact_lagrangian(cmdp, p, lam, eta, risk_objective.thresholds, omega,
                                risk_objective.measures)

    fd = fd_gradient(lag, policy.get_flat())
    worst = 0.0
    for fn in (primal_gradient_reinforce, primal_gradient_gpomdp):
        est = estimator_expectation(
            cmdp, policy, lambda t: fn(Batch([t]), policy, lam, eta, risk_objective), enum
        )
        worst = max(worst, float(np.abs(est - fd).max() / max(np.abs(fd).max(), 1e-12)))

    dual_exact = fd_gradient(
        lambda l: exact_lagrangian(cmdp, policy, l, eta, risk_objective.thresholds, omega,
                                   risk_objective.measures), lam, h=1e-6)
    dual_est = estimator_expectation(
        cmdp, policy, lambda t: dual_gradient(Batch([t]), lam, eta, risk_objective, omega), enum)
    worst = max(worst, float(np.abs(dual_est - dual_exact).max()))

    eta_exact = fd_gradient(
        lambda e: exact_lagrangian(cmdp, policy, lam, e, risk_objective.thresholds, omega,
                                   risk_objective.measures), eta, h=1e-6)
    eta_est = estimator_expectation(
        cmdp, policy, lambda t: eta_gradient(Batch([t]), lam, eta, risk_objective), enum)
    worst = max(worst, float(np.abs(eta_est - eta_exact).max()))
    return worst < 1e-4, f"max gradient mismatch = {worst:.2e}"


def _check_closed_forms(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        omega = float(rng.uniform(0.3, 1.0))
        j_minus_b = rng.uniform(-0.5, 0.5, size=1)
        j0 = float(rng.uniform(-1.0, 0.0))
        radius = 1.0 / omega  # sqrt(U) * j_max / omega with U = 1, j_max = 1

        def l_omega(points):
            lam = points[:, 0]
            vals = j0 + lam * j_minus_b[0] - 0.5 * omega * lam**2
            return np.where(lam <= radius, vals, -np.inf)

        _, grid_val = grid_search(l_omega, [(0.0, radius)], 1e-3)
        closed = h_omega_closed_form(j0, j_minus_b, omega)
        worst = max(worst, abs(grid_val - closed))
        lam_star = lambda_star_closed_form(j_minus_b, omega)
        projected = project_lambda(j_minus_b / omega, omega, 1.0)
        worst = max(worst, float(np.abs(lam_star - projected).max()))
    return worst < 1e-4, f"max closed-form vs grid gap = {worst:.2e}"


def _check_risk_consistency(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 6))
        values = np.sort(rng.uniform(0.0, 3.0, size=n))
        probs = rng.random(n) + 0.1
        probs /= probs.sum()
        grid = np.arange(0.0, 3.0 + 1e-9, 1e-3)
        for measure in (RiskMeasure.cvar(0.7), RiskMeasure.mean_variance(0.5)):
            objective = np.array([
                float(measure.f_eval(values, eta) @ probs) + measure.g_eval(eta)
                for eta in grid
            ])
            gap = abs(objective.min() - exact_measure(values, probs, measure))
            tol = 1e-3 if measure.kind == "cvar" else 1e-5
            worst = max(worst, gap / tol)
    return worst < 1.0, f"worst gap / tolerance = {worst:.3f}"


def _check_rollout_determinism(rng) -> tuple[bool, str]:
    from ..envs import WalledGridworld

    env = WalledGridworld()
    policy = TabularSoftmaxPolicy(env.n_states, 4, theta=rng.standard_normal((env.n_states, 4)))
    t1 = rollout(env, policy, 50, np.random.default_rng(123))
    t2 = rollout(env, policy, 50, np.random.default_rng(123))
    same = (
        np.array_equal(t1.states, t2.states)
        and np.array_equal(t1.actions, t2.actions)
        and np.array_equal(t1.rewards, t2.rewards)
    )
    return same, "identical seeds give identical trajectories"


CHECKS = [
    ("score functions match finite differences", _check_scores),
    ("trajectory enumeration probabilities sum to 1", _check_enumeration),
    ("estimator expectations match exact gradients", _check_estimators),
    ("closed forms match grid search", _check_closed_forms),
    ("risk measures match their variational form", _check_risk_consistency),
    ("rollouts are seed-deterministic", _check_rollout_determinism),
]


def run_verification(seed: int = 0, printer=print) -> bool:
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in CHECKS:
        ok, detail = check(rng)
        all_ok &= ok
        printer(f"[{'PASS' if ok else 'FAIL'}] {name} ({detail})")
    return all_ok

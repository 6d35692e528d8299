"""Unified risk measures over trajectory costs.

Every supported measure decomposes as ``min_eta E[f(C, eta)] + g(eta)`` for a
pair of functions (f, g), so the same primal-dual machinery optimizes expected
cost, mean-variance, CVaR, and chance constraints.  The eta-free measures
(expected cost, chance) report ``needs_eta = False`` and expose no eta
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import ValidationError, check_in_range, check_nonnegative, check_positive

EXPECTED_COST = "expected_cost"
MEAN_VARIANCE = "mean_variance"
CVAR = "cvar"
CHANCE = "chance"

_KINDS = (EXPECTED_COST, MEAN_VARIANCE, CVAR, CHANCE)


@dataclass(frozen=True)
class RiskMeasure:
    """One tagged (f, g) pair with its parameter.

    ``param`` is kappa for mean-variance (> 0), the confidence level alpha for
    CVaR (in (0, 1)), and the exceedance level n for chance (>= 0).  Expected
    cost takes no parameter.
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown risk measure kind {self.kind!r}")
        if self.kind == EXPECTED_COST and self.param is not None:
            raise ValidationError("expected_cost takes no parameter")
        if self.kind == MEAN_VARIANCE:
            check_positive("mean_variance kappa", self.param)
        if self.kind == CVAR:
            check_in_range("cvar alpha", self.param, 0.0, 1.0)
            if self.param in (0.0, 1.0):
                raise ValidationError("cvar alpha must lie strictly inside (0, 1)")
        if self.kind == CHANCE:
            check_nonnegative("chance level", self.param)

    @classmethod
    def expected_cost(cls) -> "RiskMeasure":
        return cls(EXPECTED_COST)

    @classmethod
    def mean_variance(cls, kappa: float) -> "RiskMeasure":
        return cls(MEAN_VARIANCE, float(kappa))

    @classmethod
    def cvar(cls, alpha: float) -> "RiskMeasure":
        return cls(CVAR, float(alpha))

    @classmethod
    def chance(cls, level: float) -> "RiskMeasure":
        return cls(CHANCE, float(level))

    @property
    def needs_eta(self) -> bool:
        return self.kind in (MEAN_VARIANCE, CVAR)

    def f_eval(self, cost, eta):
        """f(C, eta); vectorized over ``cost``."""
        cost = np.asarray(cost, dtype=float)
        if self.kind == EXPECTED_COST:
            return cost + 0.0
        if self.kind == MEAN_VARIANCE:
            kappa = self.param
            return (1.0 - 2.0 * kappa * eta) * cost + kappa * cost**2
        if self.kind == CVAR:
            alpha = self.param
            return np.maximum(cost - eta, 0.0) / (1.0 - alpha)
        return (cost >= self.param).astype(float)

    def g_eval(self, eta: float) -> float:
        if self.kind == MEAN_VARIANCE:
            return self.param * float(eta) ** 2
        if self.kind == CVAR:
            return float(eta)
        return 0.0

    def f_eta_subgrad(self, cost, eta):
        """Subgradient of f in eta; the kink of the CVaR hinge takes its
        left branch, so the indicator is inclusive at C == eta."""
        self._require_eta()
        cost = np.asarray(cost, dtype=float)
        if self.kind == MEAN_VARIANCE:
            return -2.0 * self.param * cost
        alpha = self.param
        return -(cost >= eta).astype(float) / (1.0 - alpha)

    def g_eta_grad(self, eta: float) -> float:
        self._require_eta()
        if self.kind == MEAN_VARIANCE:
            return 2.0 * self.param * float(eta)
        return 1.0

    def _require_eta(self):
        if not self.needs_eta:
            raise TypeError(f"{self.kind} has no eta variable")


def exact_measure(values, probs, measure: RiskMeasure) -> float:
    """Textbook value of ``measure`` on a finite cost distribution.

    ``values``/``probs`` describe a discrete random variable Z.  Expected cost
    gives E[Z]; mean-variance E[Z] + kappa Var[Z]; chance P(Z >= n); CVaR the
    exact minimum of eta + E[(Z - eta)^+] / (1 - alpha), which is attained at
    a support point because the objective is piecewise linear in eta.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValidationError("values must be a nonempty 1-d array")
    probs = np.asarray(probs, dtype=float)
    if probs.shape != values.shape:
        raise ValidationError("values and probs must have matching shapes")
    if np.any(probs < 0):
        raise ValidationError("probs has negative entries")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ValidationError(f"probs must sum to 1, got {probs.sum()!r}")

    mean = float(values @ probs)
    if measure.kind == EXPECTED_COST:
        return mean
    if measure.kind == MEAN_VARIANCE:
        var = float((values - mean) ** 2 @ probs)
        return mean + measure.param * var
    if measure.kind == CHANCE:
        return float(probs[values >= measure.param].sum())
    alpha = measure.param
    gaps = np.maximum(values[None, :] - values[:, None], 0.0)  # row i: (Z - v_i)^+
    objective = values + (gaps @ probs) / (1.0 - alpha)
    return float(objective.min())

import numpy as np
import pytest

from cpg.risk import RiskMeasure, exact_measure
from cpg.validation import ValidationError


def grid_min_of_variational_form(values, probs, measure, lo, hi, step):
    """Independent oracle: minimize E[f(Z, eta)] + g(eta) over an eta grid."""
    etas = np.arange(lo, hi + step / 2, step)
    best = np.inf
    for eta in etas:
        val = float(measure.f_eval(values, eta) @ probs) + measure.g_eval(eta)
        best = min(best, val)
    return best


class TestFEval:
    def test_cvar_hinge(self):
        m = RiskMeasure.cvar(0.95)
        assert m.f_eval(3.0, 2.0) == pytest.approx(20.0)

    def test_mean_variance_row(self):
        m = RiskMeasure.mean_variance(0.5)
        assert m.f_eval(2.0, 1.0) == pytest.approx(2.0)

    def test_chance_indicator_inclusive(self):
        m = RiskMeasure.chance(2.0)
        assert m.f_eval(1.0, 0.0) == 0.0
        assert m.f_eval(2.0, 0.0) == 1.0

    def test_expected_cost_identity(self):
        assert RiskMeasure.expected_cost().f_eval(0.7, 9.9) == pytest.approx(0.7)


class TestGEval:
    def test_mean_variance(self):
        assert RiskMeasure.mean_variance(0.5).g_eval(3.0) == pytest.approx(4.5)

    def test_cvar(self):
        assert RiskMeasure.cvar(0.9).g_eval(1.2) == pytest.approx(1.2)

    def test_eta_free_measures(self):
        assert RiskMeasure.expected_cost().g_eval(5.0) == 0.0
        assert RiskMeasure.chance(1.0).g_eval(5.0) == 0.0


class TestEtaDerivatives:
    def test_cvar_subgradient_above(self):
        m = RiskMeasure.cvar(0.95)
        assert m.f_eta_subgrad(3.0, 2.0) == pytest.approx(-20.0)

    def test_cvar_subgradient_below(self):
        assert RiskMeasure.cvar(0.95).f_eta_subgrad(1.0, 2.0) == 0.0

    def test_mean_variance_subgradient(self):
        assert RiskMeasure.mean_variance(0.5).f_eta_subgrad(2.0, 0.3) == pytest.approx(-2.0)

    def test_g_grads(self):
        assert RiskMeasure.mean_variance(0.5).g_eta_grad(3.0) == pytest.approx(3.0)
        assert RiskMeasure.cvar(0.5).g_eta_grad(7.0) == pytest.approx(1.0)

    def test_cvar_combined_subgradient_above_all_costs(self):
        # eta above every cost: the hinge is flat and only g' = 1 remains.
        m = RiskMeasure.cvar(0.9)
        costs = np.array([0.2, 0.5, 0.8])
        combined = float(np.mean(m.f_eta_subgrad(costs, 1.5))) + m.g_eta_grad(1.5)
        assert combined == pytest.approx(1.0)

    def test_eta_free_measures_raise(self):
        with pytest.raises(TypeError):
            RiskMeasure.expected_cost().f_eta_subgrad(1.0, 0.0)
        with pytest.raises(TypeError):
            RiskMeasure.chance(1.0).g_eta_grad(0.0)


class TestExactMeasure:
    def test_point_mass(self):
        values, probs = np.array([5.0]), np.array([1.0])
        assert exact_measure(values, probs, RiskMeasure.cvar(0.3)) == pytest.approx(5.0)
        assert exact_measure(values, probs, RiskMeasure.mean_variance(2.0)) == pytest.approx(5.0)
        assert exact_measure(values, probs, RiskMeasure.chance(5.0)) == pytest.approx(1.0)

    def test_uniform_cvar(self):
        # Oracle: minimize eta + E[(Z - eta)^+] / (1 - alpha) over the support
        # {0, 10}: at eta=0 the value is 0 + 5/0.5 = 10, at eta=10 it is 10.
        values, probs = np.array([0.0, 10.0]), np.array([0.5, 0.5])
        assert exact_measure(values, probs, RiskMeasure.cvar(0.5)) == pytest.approx(10.0)

    def test_uniform_mean_variance(self):
        values, probs = np.array([0.0, 10.0]), np.array([0.5, 0.5])
        assert exact_measure(values, probs, RiskMeasure.mean_variance(0.1)) == pytest.approx(7.5)

    def test_invalid_distribution(self):
        with pytest.raises(ValidationError):
            exact_measure([1.0, 2.0], [0.7, 0.7], RiskMeasure.expected_cost())


class TestVariationalConsistency:
    def test_mean_variance_fenchel_identity(self, rng):
        # The quadratic in eta is minimized at eta = E[Z]; a grid of step d
        # can only miss by kappa * (d/2)^2, so 2e-3 spacing keeps it under 1e-6.
        for _ in range(50):
            n = int(rng.integers(2, 7))
            values = rng.uniform(0.0, 3.0, size=n)
            probs = rng.random(n) + 0.05
            probs /= probs.sum()
            m = RiskMeasure.mean_variance(float(rng.uniform(0.1, 1.0)))
            grid_val = grid_min_of_variational_form(values, probs, m, 0.0, 3.0, 2e-3)
            assert grid_val == pytest.approx(exact_measure(values, probs, m), abs=1e-6)

    def test_cvar_rockafellar_uryasev_form(self, rng):
        step = 1e-3
        for _ in range(50):
            n = int(rng.integers(2, 7))
            values = rng.uniform(0.0, 3.0, size=n)
            probs = rng.random(n) + 0.05
            probs /= probs.sum()
            m = RiskMeasure.cvar(float(rng.uniform(0.5, 0.95)))
            grid_val = grid_min_of_variational_form(values, probs, m, 0.0, 3.0, step)
            exact = exact_measure(values, probs, m)
            assert grid_val >= exact - 1e-12
            assert grid_val == pytest.approx(exact, abs=step * (1 + 1 / (1 - m.param)))

    def test_subgradient_inequality(self, rng):
        # phi(eta') >= phi(eta) + sub(eta) (eta' - eta) for the convex
        # objective phi(eta) = E[f] + g, at every grid pair.
        for _ in range(20):
            n = int(rng.integers(2, 6))
            values = rng.uniform(0.0, 2.0, size=n)
            probs = rng.random(n) + 0.05
            probs /= probs.sum()
            measure = (RiskMeasure.cvar(0.8) if rng.random() < 0.5
                       else RiskMeasure.mean_variance(0.7))
            etas = np.linspace(0.0, 2.0, 41)
            phi = np.array([
                float(measure.f_eval(values, e) @ probs) + measure.g_eval(e) for e in etas
            ])
            subs = np.array([
                float(measure.f_eta_subgrad(values, e) @ probs) + measure.g_eta_grad(e)
                for e in etas
            ])
            for i in range(len(etas)):
                lower = phi[i] + subs[i] * (etas - etas[i])
                assert np.all(phi >= lower - 1e-9)

    def test_needs_eta_flags(self):
        assert not RiskMeasure.expected_cost().needs_eta
        assert not RiskMeasure.chance(1.0).needs_eta
        assert RiskMeasure.cvar(0.9).needs_eta
        assert RiskMeasure.mean_variance(1.0).needs_eta


class TestParameterValidation:
    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.5, 1.5])
    def test_cvar_alpha_range(self, bad):
        with pytest.raises(ValidationError):
            RiskMeasure.cvar(bad)

    def test_mean_variance_kappa_positive(self):
        with pytest.raises(ValidationError):
            RiskMeasure.mean_variance(0.0)

    def test_chance_level_nonnegative(self):
        with pytest.raises(ValidationError):
            RiskMeasure.chance(-1.0)

import numpy as np
import pytest

from cpg.oracle import TabularCmdp, random_tabular_cmdp
from cpg.policies import TabularSoftmaxPolicy


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cmdp(rng):
    """3-state / 2-action / T=3 instance used across estimator tests."""
    return random_tabular_cmdp(rng, n_states=3, n_actions=2, gamma=0.9, horizon=3)


@pytest.fixture
def small_policy(rng):
    return TabularSoftmaxPolicy(3, 2, theta=rng.standard_normal((3, 2)))


def make_two_state_chain(gamma=1.0, horizon=2) -> TabularCmdp:
    """Symmetric 2-state chain: both actions flip or keep the state with equal
    probability, so a uniform policy makes all trajectories equally likely."""
    transition = np.zeros((2, 2, 2))
    transition[:, 0] = [[1.0, 0.0], [0.0, 1.0]]  # action 0: stay
    transition[:, 1] = [[0.0, 1.0], [1.0, 0.0]]  # action 1: flip
    reward = -0.5 * np.ones((2, 2))
    costs = np.array([[[0.2, 0.8], [0.6, 0.4]]])
    mu0 = np.array([0.5, 0.5])
    return TabularCmdp(transition, reward, costs, mu0, gamma, horizon)

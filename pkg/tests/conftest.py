"""
Wspólne fixture'y: problem rzutu monetą i generator losowych problemów.
"""

from typing import Optional

import numpy as np
import pytest

from drmdp.mdp_core import (
    ActionSpace,
    AmbiguityConfig,
    RewardTable,
    StateSpace,
    TransitionKernel,
    build_problem,
    coin_toss_problem,
)

COIN_ALPHA = 0.45
TOL = 1e-9


def random_points(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n distinct points on a grid of spacing 0.5 (1-D) or 0.5 x 0.5 (2-D)."""
    cells = rng.choice(100, size=n, replace=False)
    if dim == 1:
        return (cells * 0.5)[:, None]
    return np.column_stack([cells % 10, cells // 10]) * 0.5


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    """Dirichlet weights, some of them exactly zero."""
    weights = rng.dirichlet(np.ones(n))
    weights[rng.random(n) < 0.3] = 0.0
    if weights.sum() == 0.0:
        weights[rng.integers(n)] = 1.0
    return weights / weights.sum()


def random_kernel(rng: np.random.Generator, n_states: int, n_actions: int):
    table = np.empty((n_states, n_actions, n_states))
    for x in range(n_states):
        for a in range(n_actions):
            table[x, a] = random_weights(rng, n_states)
    return TransitionKernel(table)


def random_problem(
    rng: np.random.Generator,
    n_states: Optional[int] = None,
    n_actions: Optional[int] = None,
    epsilon: Optional[float] = None,
    q: int = 1,
    dim: int = 1,
    with_true_kernel: bool = False,
    alpha_range=(0.3, 0.7),
):
    n_states = n_states or int(rng.integers(1, 9))
    n_actions = n_actions or int(rng.integers(1, 4))
    states = StateSpace(random_points(rng, n_states, dim))
    actions = ActionSpace(random_points(rng, n_actions, 1))
    center = random_kernel(rng, n_states, n_actions)
    true_kernel = (
        random_kernel(rng, n_states, n_actions) if with_true_kernel else None
    )
    reward = RewardTable(rng.uniform(-1.0, 1.0, (n_states, n_actions, n_states)))
    alpha = float(rng.uniform(*alpha_range))
    if epsilon is None:
        epsilon = float(rng.uniform(0.0, 1.0))
    return build_problem(
        states,
        actions,
        center,
        true_kernel,
        reward,
        alpha,
        AmbiguityConfig(q=q, epsilon=epsilon),
    )


@pytest.fixture
def rng():
    """Generator ze stałym seedem."""
    return np.random.default_rng(20240607)


@pytest.fixture
def make_problem():
    """Fabryka losowych problemów (|X| <= 8, |A| <= 3)."""
    return random_problem


@pytest.fixture
def cointoss():
    """Rzut 10 monetami, alpha = 0.45, kula W_1 o promieniu 0.1."""
    return coin_toss_problem(COIN_ALPHA, AmbiguityConfig(q=1, epsilon=0.1))


@pytest.fixture
def cointoss_at():
    """Rzut monetą dla zadanego promienia kuli."""

    def build(epsilon: float, q: int = 1):
        return coin_toss_problem(COIN_ALPHA, AmbiguityConfig(q=q, epsilon=epsilon))

    return build


@pytest.fixture
def binomial_tails():
    """(pmf, g) dla B ~ Bin(10, 0.5), g(x) = |P(B > x) - P(B < x)|."""
    from scipy.stats import binom

    k = np.arange(11)
    pmf = binom.pmf(k, 10, 0.5)
    above = binom.sf(k, 10, 0.5)
    below = binom.cdf(k - 1, 10, 0.5)
    return pmf, np.abs(above - below)

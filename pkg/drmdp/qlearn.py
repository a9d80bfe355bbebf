"""
Tabular robust Q-learning.

The environment is P^true; every update uses the exact worst-case target

    Q(x,a) <- (1 - g) Q(x,a) + g * min_{Q' in ball(P_hat(x,a))} E_Q'[r(x,a,.) + alpha max Q]

with g = schedule(visit count). The table, the visit counters and the
sampling all live in torch on the CPU, driven by one seeded generator, so a
given seed and config always produce the same table.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
import torch
from tqdm import tqdm

from .bellman import QFunction, ValueFunction
from .errors import MissingTrueKernel, ValidationError
from .mdp_core import ProblemSpec
from .transport import worst_case_expectation
from .utils import DEFAULT_SEED, RNG_ALGORITHM, TIE_TOL

logger = logging.getLogger(__name__)

_SEED_MIN = -(2**63)
_SEED_MAX = 2**64 - 1


def harmonic_schedule(visits: int) -> float:
    """Learning rate 1 / (1 + visits)."""
    return 1.0 / (1.0 + visits)


@dataclass(frozen=True)
class LearningConfig:
    """Episode budget, learning-rate schedule, exploration and seed."""

    episodes: int = 2000
    steps_per_episode: int = 25
    learning_rate_schedule: Callable[[int], float] = harmonic_schedule
    exploration_rate: float = 0.1
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.episodes < 0:
            raise ValidationError(f"episodes must be >= 0, got {self.episodes}")
        if self.steps_per_episode < 1:
            raise ValidationError(
                f"steps_per_episode must be >= 1, got {self.steps_per_episode}"
            )
        if not (0.0 <= self.exploration_rate <= 1.0):
            raise ValidationError(
                f"exploration_rate must lie in [0, 1], got {self.exploration_rate}"
            )
        if not (_SEED_MIN <= int(self.seed) <= _SEED_MAX):
            raise ValidationError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def total_updates(self) -> int:
        return self.episodes * self.steps_per_episode

    def describe(self) -> str:
        """One-line summary for output headers."""
        schedule = getattr(
            self.learning_rate_schedule, "__name__", repr(self.learning_rate_schedule)
        )
        return (
            f"rng={RNG_ALGORITHM} seed={self.seed} episodes={self.episodes} "
            f"steps_per_episode={self.steps_per_episode} "
            f"exploration_rate={self.exploration_rate} schedule={schedule}"
        )


def _greedy_action(row: torch.Tensor) -> int:
    best = row.max()
    tied = row >= best - TIE_TOL * (1.0 + best.abs())
    # argmax returns the first maximal index
    return int(torch.argmax(tied.to(torch.uint8)))


def _learning_rate(config: LearningConfig, visits: int) -> float:
    rate = float(config.learning_rate_schedule(visits))
    if not (0.0 < rate <= 1.0):
        raise ValidationError(
            f"learning rate must lie in (0, 1], schedule gave {rate} at "
            f"visit {visits}"
        )
    return rate


def robust_q_learning(
    problem: ProblemSpec,
    config: Optional[LearningConfig] = None,
    verbose: bool = False,
) -> QFunction:
    """
    Learn the robust Q-function by sampling P^true.

    Each episode starts in a uniformly drawn state with a uniformly drawn
    action; afterwards actions are epsilon-greedy with respect to the
    current table.

    Raises:
        MissingTrueKernel: the problem has no sampling environment
    """
    if problem.true_kernel is None:
        raise MissingTrueKernel("Q-learning samples transitions from P^true")
    config = config or LearningConfig()

    n_states, n_actions = problem.n_states, problem.n_actions
    eps, q = problem.ambiguity.epsilon, problem.ambiguity.q
    cost = problem.cost
    rewards = problem.reward.values
    alpha = problem.alpha
    environment = torch.tensor(problem.true_kernel.table, dtype=torch.float64)

    generator = torch.Generator(device="cpu")
    generator.manual_seed(int(config.seed))

    table = torch.zeros((n_states, n_actions), dtype=torch.float64)
    visits = torch.zeros((n_states, n_actions), dtype=torch.int64)

    episodes: Iterable[int] = range(config.episodes)
    if verbose:
        episodes = tqdm(episodes, desc="Robust Q-learning", unit="episode")

    for _ in episodes:
        x = int(torch.randint(n_states, (1,), generator=generator))
        a = int(torch.randint(n_actions, (1,), generator=generator))
        for step in range(config.steps_per_episode):
            if step > 0:
                explore = float(torch.rand(1, generator=generator))
                if explore < config.exploration_rate:
                    a = int(torch.randint(n_actions, (1,), generator=generator))
                else:
                    a = _greedy_action(table[x])

            continuation = table.max(dim=1).values.numpy()
            target = worst_case_expectation(
                rewards[x, a] + alpha * continuation,
                problem.center[x, a],
                eps,
                q,
                cost,
            ).value
            rate = _learning_rate(config, int(visits[x, a]))
            table[x, a] = (1.0 - rate) * table[x, a] + rate * target
            visits[x, a] += 1

            x = int(torch.multinomial(environment[x, a], 1, generator=generator))

    never = int((visits == 0).sum())
    if never:
        logger.warning("%d state-action pairs were never visited", never)
    logger.info(
        "robust Q-learning finished: %d updates (%s)",
        config.total_updates,
        config.describe(),
    )
    return QFunction(table.numpy().copy())


def greedy_value(q_function: QFunction) -> ValueFunction:
    """V(x) = max_a Q(x, a)."""
    return ValueFunction(np.max(q_function.values, axis=1))


def greedy_policy(q_function: QFunction) -> np.ndarray:
    """Greedy action index per state, lowest index on ties."""
    rows = torch.from_numpy(np.array(q_function.values))
    return np.array([_greedy_action(row) for row in rows], dtype=int)

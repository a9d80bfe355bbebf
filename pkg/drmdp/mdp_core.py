"""
Finite problem data model.

State and action spaces are finite point sets in Euclidean space; all
downstream computation is index-based. Distributions, kernels and rewards
are dense arrays, immutable after construction.

Usage:
    from drmdp.mdp_core import AmbiguityConfig, coin_toss_problem

    problem = coin_toss_problem(0.45, AmbiguityConfig(q=1, epsilon=0.1))
    problem.center[3, 1].weights   # Bin(10, 0.5)
"""

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from .errors import (
    DimensionMismatch,
    InvalidDiscount,
    InvalidDistribution,
    MissingKernelEntry,
    ValidationError,
)
from .utils import INPUT_SUM_TOL, NEGATIVE_TOL, SUM_TOL, distance_matrix

ArrayLike = Union[np.ndarray, Sequence]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _as_points(points: ArrayLike, name: str) -> np.ndarray:
    """Validate a point set and return it as a read-only (n, d) array."""
    try:
        rows = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: points must be real vectors") from exc
    if not rows:
        raise ValidationError(f"{name}: point set is empty")
    dims = {row.shape for row in rows}
    if len(dims) != 1 or rows[0].ndim != 1 or rows[0].size == 0:
        raise DimensionMismatch(
            f"{name}: all points must be vectors of one dimension, got "
            f"shapes {sorted(dims)}"
        )
    array = np.vstack(rows)
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name}: coordinates must be finite")
    if len(array) > 1:
        dist = distance_matrix(array)
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= 0.0:
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            raise ValidationError(
                f"{name}: points {min(i, j)} and {max(i, j)} coincide"
            )
    return _frozen(array)


@dataclass(frozen=True, eq=False)
class _PointSet:
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "points", _as_points(self.points, type(self).__name__)
        )

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.size

    @cached_property
    def distances(self) -> np.ndarray:
        """|S| x |S| Euclidean distance matrix, computed once."""
        return _frozen(distance_matrix(self.points))

    @cached_property
    def norms(self) -> np.ndarray:
        """Euclidean norm of every point."""
        return _frozen(np.linalg.norm(self.points, axis=1))

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.points.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(size={self.size}, dim={self.dim})"

    @classmethod
    def from_values(cls, values: Sequence[float]):
        """Points on the real line, one per value."""
        return cls([[float(v)] for v in values])


class StateSpace(_PointSet):
    """Finite state space X embedded in R^d."""

    def is_integer_grid(self, n: int) -> bool:
        """True when the states are exactly 0, 1, ..., n on the line."""
        return (
            self.dim == 1
            and self.size == n + 1
            and np.array_equal(self.points[:, 0], np.arange(n + 1))
        )


class ActionSpace(_PointSet):
    """Finite action space A embedded in R^m."""


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """
    Probability weights indexed by state.

    Construction validates and renormalizes: weights below -1e-12 or a sum
    more than `tol` away from one raise InvalidDistribution.
    """

    weights: np.ndarray
    tol: float = field(default=INPUT_SUM_TOL, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise InvalidDistribution("distribution has no weights")
        if not np.all(np.isfinite(w)):
            raise InvalidDistribution("weights must be finite")
        if w.min() < -NEGATIVE_TOL:
            raise InvalidDistribution(
                f"negative weight {w.min():.3e} at index {int(np.argmin(w))}"
            )
        np.clip(w, 0.0, None, out=w)
        total = w.sum()
        if abs(total - 1.0) > self.tol:
            raise InvalidDistribution(
                f"weights sum to {total!r}, expected 1 within {self.tol:g}"
            )
        if abs(total - 1.0) > SUM_TOL:
            w = w / total
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def _trusted(cls, weights: np.ndarray) -> "DiscreteDistribution":
        """Wrap weights already known to be a distribution (hot paths)."""
        instance = object.__new__(cls)
        w = np.array(weights, dtype=float)
        np.clip(w, 0.0, None, out=w)
        total = w.sum()
        if abs(total - 1.0) > SUM_TOL:
            w /= total
        object.__setattr__(instance, "weights", _frozen(w))
        object.__setattr__(instance, "tol", INPUT_SUM_TOL)
        return instance

    @classmethod
    def point_mass(cls, index: int, size: int) -> "DiscreteDistribution":
        weights = np.zeros(size)
        weights[index] = 1.0
        return cls(weights)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.size

    def expectation(self, values: ArrayLike) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


KernelEntry = Union[DiscreteDistribution, ArrayLike]


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """
    (state, action) -> DiscreteDistribution, stored as a dense
    |X| x |A| x |X| array. Indexing with `kernel[x, a]` returns the
    distribution of the next state.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 3 or table.shape[0] != table.shape[2]:
            raise DimensionMismatch(
                f"kernel table must have shape (|X|, |A|, |X|), got "
                f"{table.shape}"
            )
        for x in range(table.shape[0]):
            for a in range(table.shape[1]):
                try:
                    table[x, a] = DiscreteDistribution(table[x, a]).weights
                except InvalidDistribution as exc:
                    raise InvalidDistribution(
                        f"kernel entry (state {x}, action {a}): {exc}"
                    ) from exc
        object.__setattr__(self, "table", _frozen(table))

    @classmethod
    def from_mapping(
        cls,
        entries: Mapping[Tuple[int, int], KernelEntry],
        n_states: int,
        n_actions: int,
    ) -> "TransitionKernel":
        """Build from a {(state, action): distribution} mapping; the mapping
        must be total."""
        table = np.empty((n_states, n_actions, n_states))
        for x in range(n_states):
            for a in range(n_actions):
                if (x, a) not in entries:
                    raise MissingKernelEntry(x, a)
                entry = entries[(x, a)]
                weights = (
                    entry.weights
                    if isinstance(entry, DiscreteDistribution)
                    else np.asarray(entry, dtype=float)
                )
                if weights.shape != (n_states,):
                    raise DimensionMismatch(
                        f"kernel entry (state {x}, action {a}) has "
                        f"{weights.size} weights, state space has {n_states}"
                    )
                table[x, a] = weights
        return cls(table)

    @classmethod
    def constant(
        cls, distribution: DiscreteDistribution, n_actions: int
    ) -> "TransitionKernel":
        """The same next-state distribution for every (state, action)."""
        n = distribution.size
        table = np.broadcast_to(distribution.weights, (n, n_actions, n))
        return cls(table.copy())

    @property
    def n_states(self) -> int:
        return int(self.table.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.table.shape[1])

    @cached_property
    def distributions(self) -> Tuple[Tuple[DiscreteDistribution, ...], ...]:
        """distributions[x][a], built once for hot loops."""
        return tuple(
            tuple(
                DiscreteDistribution._trusted(self.table[x, a])
                for a in range(self.n_actions)
            )
            for x in range(self.n_states)
        )

    def __getitem__(self, key: Tuple[int, int]) -> DiscreteDistribution:
        x, a = key
        return self.distributions[x][a]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionKernel):
            return NotImplemented
        return np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash(self.table.tobytes())

    def __repr__(self) -> str:
        return (
            f"TransitionKernel(n_states={self.n_states}, "
            f"n_actions={self.n_actions})"
        )


@dataclass(frozen=True, eq=False)
class RewardTable:
    """Dense reward r(x, a, x') over X x A x X."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3 or values.shape[0] != values.shape[2]:
            raise DimensionMismatch(
                f"reward table must have shape (|X|, |A|, |X|), got "
                f"{values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("reward values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_function(
        cls,
        states: StateSpace,
        actions: ActionSpace,
        fn: Callable[[np.ndarray, np.ndarray, np.ndarray], float],
    ) -> "RewardTable":
        """Materialize r(x, a, x') from a function of the points."""
        values = np.empty((states.size, actions.size, states.size))
        for x, x_point in enumerate(states.points):
            for a, a_point in enumerate(actions.points):
                for y, y_point in enumerate(states.points):
                    values[x, a, y] = fn(x_point, a_point, y_point)
        return cls(values)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def __getitem__(self, key: Tuple[int, int, int]) -> float:
        return float(self.values[key])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewardTable):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class AmbiguityConfig:
    """Wasserstein order q and ball radius epsilon."""

    q: int = 1
    epsilon: float = 0.0

    def __post_init__(self):
        try:
            valid = not isinstance(self.q, bool) and int(self.q) == self.q
        except (TypeError, ValueError):
            valid = False
        if not valid or self.q < 1:
            raise ValidationError(
                f"Wasserstein order q must be an integer >= 1, got {self.q!r}"
            )
        epsilon = float(self.epsilon)
        if not math.isfinite(epsilon) or epsilon < 0.0:
            raise ValidationError(
                f"ball radius epsilon must be finite and >= 0, got "
                f"{self.epsilon!r}"
            )
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "epsilon", epsilon)

    @property
    def budget(self) -> float:
        """Transport budget epsilon^q of the inner problem."""
        return self.epsilon**self.q


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A validated robust MDP instance; build it with build_problem."""

    states: StateSpace
    actions: ActionSpace
    center: TransitionKernel
    true_kernel: Optional[TransitionKernel]
    reward: RewardTable
    alpha: float
    ambiguity: AmbiguityConfig

    @property
    def n_states(self) -> int:
        return self.states.size

    @property
    def n_actions(self) -> int:
        return self.actions.size

    @property
    def has_true_kernel(self) -> bool:
        return self.true_kernel is not None

    @cached_property
    def cost(self):
        """CostMatrix for the ambiguity order q."""
        from .transport import cost_matrix

        return cost_matrix(self.states, self.ambiguity.q)

    @property
    def value_bound(self) -> float:
        """max|r| / (1 - alpha), a bound on every value function."""
        return self.reward.max_abs / (1.0 - self.alpha)

    def with_ambiguity(
        self, ambiguity: Optional[AmbiguityConfig] = None, **changes
    ) -> "ProblemSpec":
        """Copy with a new ambiguity config (or changed q / epsilon)."""
        if ambiguity is None:
            ambiguity = dataclasses.replace(self.ambiguity, **changes)
        return dataclasses.replace(self, ambiguity=ambiguity)

    def _fields(self):
        return (
            self.states,
            self.actions,
            self.center,
            self.true_kernel,
            self.reward,
            self.alpha,
            self.ambiguity,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return self._fields() == other._fields()

    def __hash__(self) -> int:
        return hash(self._fields())

    def isclose(self, other: "ProblemSpec", atol: float = 1e-12) -> bool:
        """Equality up to `atol` on every real-valued array."""

        def close(a: np.ndarray, b: np.ndarray) -> bool:
            return a.shape == b.shape and np.allclose(a, b, rtol=0, atol=atol)

        if (self.true_kernel is None) != (other.true_kernel is None):
            return False
        return (
            close(self.states.points, other.states.points)
            and close(self.actions.points, other.actions.points)
            and close(self.center.table, other.center.table)
            and (
                self.true_kernel is None
                or close(self.true_kernel.table, other.true_kernel.table)
            )
            and close(self.reward.values, other.reward.values)
            and abs(self.alpha - other.alpha) <= atol
            and self.ambiguity.q == other.ambiguity.q
            and abs(self.ambiguity.epsilon - other.ambiguity.epsilon) <= atol
        )

    def __repr__(self) -> str:
        return (
            f"ProblemSpec(n_states={self.n_states}, "
            f"n_actions={self.n_actions}, alpha={self.alpha}, "
            f"q={self.ambiguity.q}, epsilon={self.ambiguity.epsilon}, "
            f"true_kernel={'yes' if self.has_true_kernel else 'no'})"
        )


def _check_kernel(
    kernel: TransitionKernel, states: StateSpace, actions: ActionSpace, name: str
) -> None:
    expected = (states.size, actions.size, states.size)
    if kernel.table.shape != expected:
        raise DimensionMismatch(
            f"{name} has shape {kernel.table.shape}, spaces require {expected}"
        )


def build_problem(
    states: StateSpace,
    actions: ActionSpace,
    center: TransitionKernel,
    true_kernel: Optional[TransitionKernel],
    reward: RewardTable,
    alpha: float,
    ambiguity: AmbiguityConfig,
) -> ProblemSpec:
    """
    Assemble and validate a ProblemSpec.

    Raises:
        InvalidDiscount: alpha not strictly inside (0, 1)
        DimensionMismatch: kernel or reward shapes disagree with the spaces
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidDiscount(f"discount alpha must lie in (0, 1), got {alpha}")
    _check_kernel(center, states, actions, "center kernel")
    if true_kernel is not None:
        _check_kernel(true_kernel, states, actions, "true kernel")
    expected = (states.size, actions.size, states.size)
    if reward.values.shape != expected:
        raise DimensionMismatch(
            f"reward has shape {reward.values.shape}, spaces require {expected}"
        )
    return ProblemSpec(
        states=states,
        actions=actions,
        center=center,
        true_kernel=true_kernel,
        reward=reward,
        alpha=alpha,
        ambiguity=ambiguity,
    )


def binomial_distribution(
    n: int, p: float, states: StateSpace
) -> DiscreteDistribution:
    """Bin(n, p) over the states 0, 1, ..., n on the real line."""
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"success probability must be in [0, 1], got {p}")
    if not states.is_integer_grid(n):
        raise ValidationError(
            f"binomial distribution needs the states 0..{n} on the line, got "
            f"{states!r}"
        )
    weights = binom.pmf(np.arange(n + 1), n, p)
    return DiscreteDistribution(weights)


def coin_toss_reward(x: np.ndarray, a: np.ndarray, y: np.ndarray) -> float:
    """Bet a on the next toss: +a if it is larger, -a if smaller."""
    return float(a[0] * np.sign(y[0] - x[0]))


def coin_toss_problem(
    alpha: float,
    ambiguity: AmbiguityConfig,
    n_coins: int = 10,
    p: float = 0.5,
    true_p: Optional[float] = None,
) -> ProblemSpec:
    """
    Betting on repeated tosses of `n_coins` coins.

    States are the head counts {0, ..., n_coins}, actions {-1, 0, 1} (bet on
    smaller / no bet / bet on larger). The center kernel is Bin(n_coins, p)
    for every (x, a); the true kernel uses `true_p` (defaults to `p`, in
    which case it is the very same kernel object).
    """
    states = StateSpace.from_values(range(n_coins + 1))
    actions = ActionSpace.from_values([-1, 0, 1])
    center = TransitionKernel.constant(
        binomial_distribution(n_coins, p, states), actions.size
    )
    if true_p is None or true_p == p:
        true_kernel = center
    else:
        true_kernel = TransitionKernel.constant(
            binomial_distribution(n_coins, true_p, states), actions.size
        )
    reward = RewardTable.from_function(states, actions, coin_toss_reward)
    return build_problem(
        states, actions, center, true_kernel, reward, alpha, ambiguity
    )


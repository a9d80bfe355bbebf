"""
Bellman operators and value iteration.

Three one-step operators share the outer max over actions:

- nominal:  T^true v(x) = max_a E_{P(x,a)}[r(x,a,.) + alpha v]
- robust:   T v(x)      = max_a min_{Q in ball(P_hat(x,a))} E_Q[...]
- fixed:    T^wc v(x)   = nominal form with a supplied kernel

value_iteration iterates one of them to its fixed point; the robust fixed
point and its worst-case kernel are what certify compares against V^true.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, NonConvergence, ValidationError
from .mdp_core import ArrayLike, ProblemSpec, TransitionKernel
from .transport import worst_case_expectation
from .utils import DEFAULT_MAX_ITER, DEFAULT_TOL, TIE_TOL

logger = logging.getLogger(__name__)

NOMINAL = "nominal"
ROBUST = "robust"
FIXED = "fixed"
MODES = (NOMINAL, ROBUST, FIXED)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Values over state indices."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise ValidationError("value function must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, n_states: int) -> "ValueFunction":
        return cls(np.zeros(n_states))

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, index: int) -> float:
        return float(self.values[index])

    def sup_distance(self, other: "ValueFunction") -> float:
        return float(np.max(np.abs(self.values - other.values)))


@dataclass(frozen=True, eq=False)
class QFunction:
    """Action values, |X| x |A|."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch(
                f"Q-function must be a |X| x |A| matrix, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("Q-function must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class Policy:
    """Stationary deterministic policy: an action index per state."""

    action_index: np.ndarray

    def __getitem__(self, state: int) -> int:
        return int(self.action_index[state])

    def __len__(self) -> int:
        return int(self.action_index.size)


@dataclass(frozen=True)
class FixedPointReport:
    """Outcome of value iteration."""

    value: ValueFunction
    iterations: int
    residual: float
    converged: bool
    mode: str
    threshold: float
    residuals: Tuple[float, ...] = ()


VectorLike = Union[ValueFunction, ArrayLike]


def _vector(problem: ProblemSpec, v: VectorLike) -> np.ndarray:
    values = v.values if isinstance(v, ValueFunction) else np.asarray(v, float)
    values = np.asarray(values, dtype=float).ravel()
    if values.size != problem.n_states:
        raise DimensionMismatch(
            f"value function has {values.size} entries, problem has "
            f"{problem.n_states} states"
        )
    return values


def _check_kernel(problem: ProblemSpec, kernel: TransitionKernel) -> None:
    expected = (problem.n_states, problem.n_actions, problem.n_states)
    if kernel.table.shape != expected:
        raise DimensionMismatch(
            f"kernel has shape {kernel.table.shape}, problem requires {expected}"
        )


def _reference_kernel(
    problem: ProblemSpec, kernel: Optional[TransitionKernel]
) -> TransitionKernel:
    """The supplied kernel, else P^true, else P_hat."""
    if kernel is not None:
        return kernel
    if problem.true_kernel is not None:
        return problem.true_kernel
    return problem.center


def _payoffs(problem: ProblemSpec, v: np.ndarray) -> np.ndarray:
    """r(x, a, x') + alpha v(x') for every (x, a, x')."""
    return problem.reward.values + problem.alpha * v[None, None, :]


def _greedy(q_values: np.ndarray) -> np.ndarray:
    """Lowest action index among the (near-)maximizers of every row."""
    best = q_values.max(axis=1, keepdims=True)
    tied = q_values >= best - TIE_TOL * (1.0 + np.abs(best))
    return tied.argmax(axis=1)


def nominal_q(
    problem: ProblemSpec, kernel: TransitionKernel, v: VectorLike
) -> np.ndarray:
    """Q(x, a) = E_{kernel(x,a)}[r(x,a,.) + alpha v]."""
    _check_kernel(problem, kernel)
    values = _vector(problem, v)
    return np.einsum("xay,xay->xa", kernel.table, _payoffs(problem, values))


def _robust_rows(
    problem: ProblemSpec, payoffs: np.ndarray, states: range
) -> Tuple[np.ndarray, np.ndarray]:
    eps, q = problem.ambiguity.epsilon, problem.ambiguity.q
    cost = problem.cost
    q_rows = np.empty((len(states), problem.n_actions))
    worst = np.empty((len(states), problem.n_actions, problem.n_states))
    for row, x in enumerate(states):
        for a in range(problem.n_actions):
            result = worst_case_expectation(
                payoffs[x, a], problem.center[x, a], eps, q, cost
            )
            q_rows[row, a] = result.value
            worst[row, a] = result.worst_case.weights
    return q_rows, worst


def robust_q(
    problem: ProblemSpec, v: VectorLike, workers: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Robust action values and the attaining next-state weights.

    Returns:
        (Q of shape |X| x |A|, worst-case weights of shape |X| x |A| x |X|)
    """
    values = _vector(problem, v)
    payoffs = _payoffs(problem, values)
    n = problem.n_states
    if workers <= 1 or n < 2:
        return _robust_rows(problem, payoffs, range(n))

    # one block of states per worker; the sweep is a barrier
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    blocks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        parts = list(
            executor.map(lambda block: _robust_rows(problem, payoffs, block), blocks)
        )
    return (
        np.concatenate([part[0] for part in parts]),
        np.concatenate([part[1] for part in parts]),
    )


def nominal_bellman_apply(
    problem: ProblemSpec, kernel: TransitionKernel, v: VectorLike
) -> ValueFunction:
    """T^true v(x) = max_a sum_x' kernel(x,a)(x') (r(x,a,x') + alpha v(x'))."""
    return ValueFunction(nominal_q(problem, kernel, v).max(axis=1))


def fixed_kernel_bellman_apply(
    problem: ProblemSpec, kernel: TransitionKernel, v: VectorLike
) -> ValueFunction:
    """T^wc v for a fixed (typically worst-case) kernel."""
    return nominal_bellman_apply(problem, kernel, v)


def robust_bellman_apply(
    problem: ProblemSpec, v: VectorLike, workers: int = 1
) -> Tuple[ValueFunction, TransitionKernel]:
    """
    One robust sweep: max over actions of the worst-case expectation over
    the Wasserstein ball around P_hat(x, a).

    Returns:
        (T v, kernel of attaining distributions for every (x, a))
    """
    q_values, worst = robust_q(problem, v, workers=workers)
    return ValueFunction(q_values.max(axis=1)), TransitionKernel(worst)


def _operator(
    problem: ProblemSpec,
    mode: str,
    kernel: Optional[TransitionKernel],
    workers: int,
):
    if mode == NOMINAL:
        kernel = _reference_kernel(problem, kernel)
        return lambda v: nominal_q(problem, kernel, v).max(axis=1)
    if mode == ROBUST:
        return lambda v: robust_q(problem, v, workers=workers)[0].max(axis=1)
    if mode == FIXED:
        if kernel is None:
            raise ValidationError("mode 'fixed' needs a kernel")
        return lambda v: nominal_q(problem, kernel, v).max(axis=1)
    raise ValidationError(f"unknown mode {mode!r}, expected one of {MODES}")


def iterate(
    problem: ProblemSpec,
    mode: str,
    n: int,
    v0: Optional[VectorLike] = None,
    kernel: Optional[TransitionKernel] = None,
) -> Iterator[ValueFunction]:
    """Yield T v0, T^2 v0, ..., T^n v0 for the chosen operator."""
    apply = _operator(problem, mode, kernel, workers=1)
    v = np.zeros(problem.n_states) if v0 is None else _vector(problem, v0)
    for _ in range(n):
        v = apply(v)
        yield ValueFunction(v)


def value_iteration(
    problem: ProblemSpec,
    mode: str = NOMINAL,
    v0: Optional[VectorLike] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kernel: Optional[TransitionKernel] = None,
    workers: int = 1,
    strict: bool = True,
) -> FixedPointReport:
    """
    Iterate the selected operator from v0 (default 0) until the sup-norm
    residual drops to tol (1 - alpha) / (2 alpha), which guarantees
    ||v - v*|| <= tol.

    Mode "nominal" uses P^true (P_hat when the problem has no true
    kernel), "robust" the Wasserstein-ball operator, "fixed" the supplied
    kernel.

    Raises:
        NonConvergence: max_iter reached above the threshold (only when
            `strict`; the exception carries the flagged report)
    """
    if tol <= 0.0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    apply = _operator(problem, mode, kernel, workers)
    alpha = problem.alpha
    threshold = tol * (1.0 - alpha) / (2.0 * alpha)

    v = np.zeros(problem.n_states) if v0 is None else _vector(problem, v0)
    residuals: List[float] = []
    converged = False
    for iteration in range(1, max_iter + 1):
        v_next = apply(v)
        residual = float(np.max(np.abs(v_next - v)))
        residuals.append(residual)
        v = v_next
        logger.debug("%s sweep %d: residual %.3e", mode, iteration, residual)
        if residual <= threshold:
            converged = True
            break

    report = FixedPointReport(
        value=ValueFunction(v),
        iterations=len(residuals),
        residual=residuals[-1] if residuals else float("inf"),
        converged=converged,
        mode=mode,
        threshold=threshold,
        residuals=tuple(residuals),
    )
    if converged:
        logger.info(
            "%s value iteration converged in %d sweeps (residual %.3e)",
            mode,
            report.iterations,
            report.residual,
        )
    elif strict:
        raise NonConvergence(report)
    else:
        logger.warning(
            "%s value iteration stopped after %d sweeps (residual %.3e)",
            mode,
            report.iterations,
            report.residual,
        )
    return report


def extract_policy(
    problem: ProblemSpec,
    mode: str,
    v: VectorLike,
    kernel: Optional[TransitionKernel] = None,
) -> Policy:
    """Greedy policy for the given operator; ties go to the lowest index."""
    if mode == ROBUST:
        q_values = robust_q(problem, v)[0]
    elif mode in (NOMINAL, FIXED):
        if mode == FIXED and kernel is None:
            raise ValidationError("mode 'fixed' needs a kernel")
        kernel = _reference_kernel(problem, kernel)
        q_values = nominal_q(problem, kernel, v)
    else:
        raise ValidationError(f"unknown mode {mode!r}, expected one of {MODES}")
    return Policy(_greedy(q_values))


def extract_worst_case_kernel(
    problem: ProblemSpec, v_star: VectorLike
) -> TransitionKernel:
    """
    P^wc: for every (x, a) the distribution attaining the inner infimum of
    the robust operator at v_star (also for non-maximizing actions).
    """
    return robust_bellman_apply(problem, v_star)[1]

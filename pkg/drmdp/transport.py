"""
Exact discrete optimal transport on a finite state space.

- wasserstein_distance / optimal_coupling: transportation LP solved by the
  network simplex of POT (`ot.emd`).
- worst_case_expectation / solve_inner_dual: the robust inner problem

      min  sum_j Q_j f_j   over Q with  d_{W_q}(Q, P) <= epsilon

  solved through its one-dimensional Lagrangian dual

      g(lam) = sum_i P_i min_j (f_j + lam c_ij) - lam epsilon^q,

  which is concave and piecewise linear. The optimal multiplier is found by
  bisecting on the subgradient (transport cost used minus budget) over the
  sorted breakpoints of g; the primal plan mixes the two tied minimizers per
  source row so the budget is met with equality when it binds.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import ot

from .errors import DimensionMismatch, TransportError, ValidationError
from .mdp_core import ArrayLike, DiscreteDistribution, StateSpace
from .utils import TIE_TOL

logger = logging.getLogger(__name__)

# Above this many (row, line, line) crossings the multiplier search bisects
# on the real line instead of enumerating breakpoints.
_MAX_BREAKPOINTS = 250_000
_BISECTION_STEPS = 200


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """entries[i, j] = ||x_i - x_j||^q."""

    entries: np.ndarray
    q: int

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])

    @property
    def diameter(self) -> float:
        """Largest distance between two states."""
        return float(self.entries.max()) ** (1.0 / self.q)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Transport plan between two distributions and its cost."""

    plan: np.ndarray
    cost: float

    def marginals(self) -> Tuple[np.ndarray, np.ndarray]:
        """(row sums, column sums)."""
        return self.plan.sum(axis=1), self.plan.sum(axis=0)


@dataclass(frozen=True)
class RobustExpectationResult:
    """Worst-case expectation over a Wasserstein ball."""

    value: float
    worst_case: DiscreteDistribution
    multiplier: float
    budget_used: float


def cost_matrix(states: StateSpace, q: int) -> CostMatrix:
    """Ground cost ||x - y||^q between all pairs of states."""
    entries = np.array(states.distances) ** q
    entries.setflags(write=False)
    return CostMatrix(entries=entries, q=int(q))


def _check_sizes(cost: CostMatrix, *sizes: int) -> None:
    for size in sizes:
        if size != cost.size:
            raise DimensionMismatch(
                f"vector of length {size} does not match the {cost.size} "
                f"states of the cost matrix"
            )


def _check_order(cost: CostMatrix, q: int) -> None:
    if cost.q != q:
        raise ValidationError(
            f"cost matrix was built for q={cost.q}, requested q={q}"
        )


def optimal_coupling(
    p1: DiscreteDistribution, p2: DiscreteDistribution, cost: CostMatrix
) -> Coupling:
    """Minimal-cost plan with marginals p1 (rows) and p2 (columns)."""
    _check_sizes(cost, p1.size, p2.size)
    # POT wants writable C-contiguous float64 buffers
    plan, log = ot.emd(
        np.array(p1.weights, dtype=np.float64),
        np.array(p2.weights, dtype=np.float64),
        np.array(cost.entries, dtype=np.float64, order="C"),
        log=True,
    )
    if log.get("warning"):
        raise TransportError(f"network simplex failed: {log['warning']}")
    plan = np.clip(np.asarray(plan, dtype=float), 0.0, None)
    value = max(float(np.sum(plan * cost.entries)), 0.0)
    plan.setflags(write=False)
    return Coupling(plan=plan, cost=value)


def wasserstein_distance(
    p1: DiscreteDistribution,
    p2: DiscreteDistribution,
    q: int,
    cost: CostMatrix,
) -> float:
    """d_{W_q}(p1, p2): q-th root of the minimal transport cost."""
    _check_order(cost, q)
    return optimal_coupling(p1, p2, cost).cost ** (1.0 / q)


def _argmin_rows(
    payoff: np.ndarray, costs: np.ndarray, lam: float, prefer_cheap: bool
) -> np.ndarray:
    """
    Per source row, the destination minimizing payoff_j + lam * cost_ij.
    Ties go to the cheapest destination (or the dearest one when
    `prefer_cheap` is False), then to the lowest index.
    """
    values = payoff[None, :] + lam * costs
    best = values.min(axis=1, keepdims=True)
    tied = values <= best + TIE_TOL * (1.0 + np.abs(best))
    if prefer_cheap:
        return np.where(tied, costs, np.inf).argmin(axis=1)
    return np.where(tied, costs, -np.inf).argmax(axis=1)


def _breakpoints(
    payoff: np.ndarray, costs: np.ndarray, lam_max: float
) -> np.ndarray:
    """Sorted multipliers in (0, lam_max] where two lines of a row cross."""
    gaps = payoff[None, None, :] - payoff[None, :, None]
    slopes = costs[:, :, None] - costs[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        crossings = gaps / slopes
    keep = np.isfinite(crossings) & (crossings > 0.0) & (crossings < lam_max)
    return np.unique(np.append(crossings[keep], lam_max))


def _bracket_multiplier(
    payoff: np.ndarray, p: np.ndarray, costs: np.ndarray, budget: float
) -> Tuple[float, float]:
    """
    (lam_left, lam_right) around the optimal multiplier: the cheapest
    minimizers at lam_right fit the budget, the dearest at lam_left do not.
    """
    rows = np.arange(p.size)

    def fits(lam: float) -> bool:
        choice = _argmin_rows(payoff, costs, lam, prefer_cheap=True)
        return float(np.dot(p, costs[rows, choice])) <= budget

    # beyond lam_max staying put is the unique minimizer of every row
    spread = float(payoff.max() - payoff.min())
    lam_max = spread / float(costs[costs > 0].min()) + 1.0

    if costs.size * payoff.size <= _MAX_BREAKPOINTS:
        candidates = _breakpoints(payoff, costs, lam_max)
        lo, hi = 0, candidates.size - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if fits(candidates[mid]):
                hi = mid
            else:
                lo = mid + 1
        lam = float(candidates[lo])
        return lam, lam

    lo_lam, hi_lam = 0.0, lam_max
    for _ in range(_BISECTION_STEPS):
        if hi_lam - lo_lam <= TIE_TOL * max(1.0, hi_lam):
            break
        mid_lam = 0.5 * (lo_lam + hi_lam)
        if fits(mid_lam):
            hi_lam = mid_lam
        else:
            lo_lam = mid_lam
    return lo_lam, hi_lam


def _solve_inner(
    payoff: np.ndarray, weights: np.ndarray, budget: float, costs: np.ndarray
) -> Tuple[float, float, np.ndarray]:
    """(multiplier, dual value, optimal plan) of the budgeted inner LP."""
    n = payoff.size
    support = np.flatnonzero(weights > 0.0)
    p = weights[support]
    c = costs[support]
    rows = np.arange(support.size)
    plan = np.zeros((n, n))

    if budget <= 0.0:
        # mass stays in place; the multiplier is the price at which no
        # move pays off
        moves = c > 0.0
        gains = np.where(
            moves,
            (payoff[support][:, None] - payoff[None, :])
            / np.where(moves, c, 1.0),
            0.0,
        )
        plan[support, support] = p
        return max(float(gains.max()), 0.0), float(np.dot(p, payoff[support])), plan

    cheapest = _argmin_rows(payoff, c, 0.0, prefer_cheap=True)
    if float(np.dot(p, c[rows, cheapest])) <= budget:
        plan[support, cheapest] = p
        return 0.0, float(np.dot(p, payoff[cheapest])), plan

    lam_left, lam_right = _bracket_multiplier(payoff, p, c, budget)
    left = _argmin_rows(payoff, c, lam_left, prefer_cheap=False)
    right = _argmin_rows(payoff, c, lam_right, prefer_cheap=True)
    used_left = float(np.dot(p, c[rows, left]))
    used_right = float(np.dot(p, c[rows, right]))
    theta = 0.0
    if used_left > used_right:
        theta = min(max((budget - used_right) / (used_left - used_right), 0.0), 1.0)
    np.add.at(plan, (support, right), (1.0 - theta) * p)
    np.add.at(plan, (support, left), theta * p)

    dual = (
        float(np.dot(p, (payoff[None, :] + lam_right * c).min(axis=1)))
        - lam_right * budget
    )
    return lam_right, dual, plan


def _as_payoff(payoff: ArrayLike, cost: CostMatrix) -> np.ndarray:
    f = np.asarray(payoff, dtype=float).ravel()
    _check_sizes(cost, f.size)
    if not np.all(np.isfinite(f)):
        raise ValidationError("payoff must be finite everywhere")
    return f


def solve_inner_dual(
    payoff: ArrayLike,
    reference: DiscreteDistribution,
    budget: float,
    cost: CostMatrix,
) -> Tuple[float, float]:
    """
    Maximize g(lam) = sum_i P_i min_j (f_j + lam c_ij) - lam * budget over
    lam >= 0.

    Returns:
        (lam, dual_value). With budget 0 the dual value is the nominal
        expectation and lam the smallest multiplier that pins mass in place.
    """
    f = _as_payoff(payoff, cost)
    _check_sizes(cost, reference.size)
    if budget < 0.0:
        raise ValidationError(f"budget must be >= 0, got {budget}")
    lam, dual, _ = _solve_inner(f, reference.weights, float(budget), cost.entries)
    return lam, dual


def worst_case_expectation(
    payoff: ArrayLike,
    reference: DiscreteDistribution,
    epsilon: float,
    q: int,
    cost: CostMatrix,
) -> RobustExpectationResult:
    """
    Minimal expected payoff over the q-Wasserstein ball of radius epsilon
    around `reference`, with the attaining distribution.
    """
    f = _as_payoff(payoff, cost)
    _check_sizes(cost, reference.size)
    _check_order(cost, q)
    if epsilon < 0.0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    budget = float(epsilon) ** q
    lam, _, plan = _solve_inner(f, reference.weights, budget, cost.entries)
    if budget <= 0.0:
        return RobustExpectationResult(
            value=reference.expectation(f),
            worst_case=reference,
            multiplier=lam,
            budget_used=0.0,
        )
    worst = plan.sum(axis=0)
    return RobustExpectationResult(
        value=float(np.dot(worst, f)),
        worst_case=DiscreteDistribution._trusted(worst),
        multiplier=lam,
        budget_used=float(np.sum(plan * cost.entries)),
    )

"""
Certificate for the gap between the nominal and the robust value function.

Estimates the Lipschitz constants of the reward, the true kernel and the
center kernel by exhaustive enumeration, checks that the problem is
admissible (discount against C_P, alpha * L_P < 1, P^true inside every
ball) and evaluates

    0 <= V^true(x) - V(x) <= (2 - centered) L_r eps (1 + alpha)
                             * sum_i alpha^i sum_{j<=i} L_P^j

together with the per-iterate versions of the same estimates.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.signal import lfilter

from .errors import (
    DivergentSeries,
    InvalidDiscount,
    MissingTrueKernel,
    ValidationError,
)
from .mdp_core import (
    ActionSpace,
    DiscreteDistribution,
    ProblemSpec,
    StateSpace,
    TransitionKernel,
)
from .transport import CostMatrix, wasserstein_distance
from .utils import CENTERED_TOL, MEMBERSHIP_TOL

logger = logging.getLogger(__name__)

OVERRIDABLE = ("L_r", "L_P", "L_center")


@dataclass(frozen=True)
class LipschitzEstimates:
    """Lipschitz constants used by the bound; `overridden` names the ones
    supplied by the caller instead of estimated."""

    L_r: float
    L_P: float
    L_center: float
    overridden: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CertificateReport:
    """Constants, admissibility flags and the bound for one problem."""

    estimates: LipschitzEstimates
    C_P: float
    alpha_ok: bool
    contraction_ok: bool
    membership_ok: bool
    max_membership_distance: float
    bound: float
    centered: bool
    has_true_kernel: bool = True
    epsilon: float = 0.0
    alpha: float = 0.0
    q: int = 1
    notes: Tuple[str, ...] = field(default=())

    @property
    def all_ok(self) -> bool:
        return self.alpha_ok and self.contraction_ok and self.membership_ok

    def tightness(self, v_true, v_robust) -> np.ndarray:
        """
        Per-state (V^true - V) / bound. Zero where the bound is zero or not
        finite.
        """
        diff = _values(v_true) - _values(v_robust)
        if self.bound == 0.0 or not math.isfinite(self.bound):
            return np.zeros_like(diff)
        return diff / self.bound

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["overridden"] = list(data["estimates"].pop("overridden"))
        data["notes"] = list(self.notes)
        data["all_ok"] = self.all_ok
        # JSON has no infinity
        if not math.isfinite(self.bound):
            data["bound"] = None
        return data


def _values(v) -> np.ndarray:
    return np.asarray(getattr(v, "values", v), dtype=float)


# =============================================================================
# Lipschitz estimators
# =============================================================================


def estimate_reward_lipschitz(problem: ProblemSpec) -> float:
    """
    max |r(x,a,y) - r(x',a',y')| / (|x-x'| + |a-a'| + |y-y'|) over all
    distinct triples, by enumeration. One (x, a) block at a time.
    """
    ds = problem.states.distances
    da = problem.actions.distances
    r = problem.reward.values
    best = 0.0
    for x in range(problem.n_states):
        for a in range(problem.n_actions):
            # axes: (x', a', y, y')
            gaps = np.abs(r[x, a][None, None, :, None] - r[:, :, None, :])
            denom = (
                ds[x][:, None, None, None]
                + da[a][None, :, None, None]
                + ds[None, None, :, :]
            )
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0.0, gaps / denom, 0.0)
            best = max(best, float(ratios.max()))
    return best


def _pair_distance_block(
    table: np.ndarray,
    pairs: np.ndarray,
    q: int,
    cost: CostMatrix,
) -> np.ndarray:
    out = np.zeros(len(pairs))
    for k, (i, j) in enumerate(pairs):
        if np.array_equal(table[i], table[j]):
            continue
        out[k] = wasserstein_distance(
            DiscreteDistribution._trusted(table[i]),
            DiscreteDistribution._trusted(table[j]),
            q,
            cost,
        )
    return out


def estimate_kernel_lipschitz(
    kernel: TransitionKernel,
    q: int,
    cost: CostMatrix,
    states: StateSpace,
    actions: ActionSpace,
    workers: int = 1,
) -> float:
    """
    max d_{W_q}(kernel(x,a), kernel(x',a')) / (|x-x'| + |a-a'|) over all
    distinct (x, a), (x', a') pairs. Pairs with identical distributions
    contribute 0 without a transport solve.
    """
    n_x, n_a = kernel.n_states, kernel.n_actions
    table = kernel.table.reshape(n_x * n_a, n_x)
    first, second = np.triu_indices(n_x * n_a, k=1)
    if first.size == 0:
        return 0.0

    x1, a1 = np.divmod(first, n_a)
    x2, a2 = np.divmod(second, n_a)
    denom = states.distances[x1, x2] + actions.distances[a1, a2]

    pairs = np.column_stack([first, second])
    if workers <= 1:
        distances = _pair_distance_block(table, pairs, q, cost)
    else:
        blocks = np.array_split(pairs, workers)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = executor.map(
                lambda block: _pair_distance_block(table, block, q, cost), blocks
            )
            distances = np.concatenate(list(parts))
    return float(np.max(distances / denom))


def check_membership(problem: ProblemSpec) -> Tuple[bool, float]:
    """
    Whether d_{W_q}(P^true(x,a), P_hat(x,a)) <= eps (+1e-9) for every pair.

    Returns:
        (ok, largest distance found)

    Raises:
        MissingTrueKernel: the problem has no true kernel
    """
    if problem.true_kernel is None:
        raise MissingTrueKernel("membership check needs a true kernel")
    if problem.true_kernel == problem.center:
        return True, 0.0

    q, cost = problem.ambiguity.q, problem.cost
    largest = 0.0
    for x in range(problem.n_states):
        for a in range(problem.n_actions):
            distance = wasserstein_distance(
                problem.true_kernel[x, a], problem.center[x, a], q, cost
            )
            largest = max(largest, distance)
    return largest <= problem.ambiguity.epsilon + MEMBERSHIP_TOL, largest


def compute_C_P(
    problem: ProblemSpec,
    L_center: Optional[float] = None,
    force_unbounded_formula: bool = False,
) -> float:
    """
    Growth constant bounding admissible discount factors.

    Finite problems have bounded rewards, which gives C_P = 1. With
    `force_unbounded_formula` the general expression

        max{1 + eps + max_a min_x (E_{P_hat(x,a)}|z| + L_center |x|), L_center}

    is evaluated by enumeration instead.
    """
    if not force_unbounded_formula:
        return 1.0
    if L_center is None:
        L_center = estimate_kernel_lipschitz(
            problem.center,
            problem.ambiguity.q,
            problem.cost,
            problem.states,
            problem.actions,
        )
    norms = problem.states.norms
    moments = np.einsum("xay,y->xa", problem.center.table, norms)
    growth = moments + L_center * norms[:, None]
    inner = float(growth.min(axis=0).max())
    return max(1.0 + problem.ambiguity.epsilon + inner, float(L_center))


# =============================================================================
# Series and bounds
# =============================================================================


def _check_constants(alpha: float, **nonnegative: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise InvalidDiscount(f"discount alpha must lie in (0, 1), got {alpha}")
    for name, value in nonnegative.items():
        if not value >= 0.0:
            raise ValidationError(f"{name} must be >= 0, got {value}")


def double_series_sum(alpha: float, L_P: float) -> float:
    """
    sum_{i>=0} alpha^i sum_{j<=i} L_P^j = 1 / ((1 - alpha)(1 - alpha L_P)).

    The product form equals (1/(1-alpha) - L_P/(1-alpha L_P)) / (1 - L_P)
    and stays finite at L_P = 1, where it reduces to 1/(1-alpha)^2.

    Raises:
        DivergentSeries: alpha * L_P >= 1
    """
    _check_constants(alpha, L_P=L_P)
    if alpha * L_P >= 1.0:
        raise DivergentSeries(
            f"series diverges: alpha * L_P = {alpha * L_P:.6g} >= 1"
        )
    return 1.0 / ((1.0 - alpha) * (1.0 - alpha * L_P))


def double_series_partial_sum(alpha: float, L_P: float, n: int) -> float:
    """
    First n outer terms: sum_{i<n} alpha^i sum_{j<=i} L_P^j.

    Each term alpha^i sum_{j<=i} L_P^j = sum_{j<=i} alpha^(i-j) (alpha L_P)^j
    follows the recurrence t_i = alpha t_{i-1} + (alpha L_P)^i, so large L_P
    never overflows.
    """
    _check_constants(alpha, L_P=L_P)
    if n <= 0:
        return 0.0
    with np.errstate(over="ignore", under="ignore"):
        drive = (alpha * L_P) ** np.arange(n, dtype=float)
    terms = lfilter([1.0], [1.0, -alpha], drive)
    return math.fsum(terms)


def theorem_bound(
    L_r: float,
    L_P: float,
    alpha: float,
    epsilon: float,
    centered: bool,
) -> float:
    """
    (2 - centered) * L_r * eps * (1 + alpha) * double_series_sum(alpha, L_P).

    Raises:
        DivergentSeries: alpha * L_P >= 1
    """
    _check_constants(alpha, L_r=L_r, L_P=L_P, epsilon=epsilon)
    series = double_series_sum(alpha, L_P)
    if epsilon == 0.0 or L_r == 0.0:
        return 0.0
    factor = 1.0 if centered else 2.0
    return factor * L_r * epsilon * (1.0 + alpha) * series


def iterate_lipschitz_bound(L_r: float, L_P: float, alpha: float, n: int) -> float:
    """
    Lipschitz constant of (T^true)^n v for an L_r-Lipschitz start:
    L_r (1 + L_P (1 + alpha) sum_{i<n} (alpha L_P)^i).
    """
    _check_constants(alpha, L_r=L_r, L_P=L_P)
    geometric = math.fsum((alpha * L_P) ** i for i in range(max(n, 0)))
    return L_r * (1.0 + L_P * (1.0 + alpha) * geometric)


def iterate_gap_bound(
    L_r: float,
    L_P: float,
    alpha: float,
    epsilon: float,
    n: int,
    centered: bool,
) -> float:
    """sup_x |(T^wc)^n v(x) - (T^true)^n v(x)| after n sweeps."""
    _check_constants(alpha, L_r=L_r, L_P=L_P, epsilon=epsilon)
    factor = 1.0 if centered else 2.0
    return (
        factor
        * L_r
        * epsilon
        * (1.0 + alpha)
        * double_series_partial_sum(alpha, L_P, n)
    )


# =============================================================================
# Certificate
# =============================================================================


def _resolve_overrides(overrides: Optional[Mapping[str, float]]) -> Dict[str, float]:
    resolved: Dict[str, float] = {}
    for name, value in (overrides or {}).items():
        if name not in OVERRIDABLE:
            raise ValidationError(
                f"unknown Lipschitz constant {name!r}, expected one of "
                f"{OVERRIDABLE}"
            )
        value = float(value)
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValidationError(f"{name} must be finite and >= 0, got {value}")
        resolved[name] = value
    return resolved


def certify(
    problem: ProblemSpec,
    overrides: Optional[Mapping[str, float]] = None,
    force_unbounded_formula: bool = False,
    workers: int = 1,
) -> CertificateReport:
    """
    Run every estimator and check and evaluate the bound.

    Without a true kernel the certificate is computed against P_hat itself
    (centered case) and `has_true_kernel` is False. A divergent series
    gives an infinite bound and contraction_ok = False instead of raising.
    """
    fixed = _resolve_overrides(overrides)
    q, cost = problem.ambiguity.q, problem.cost
    notes = []

    def kernel_constant(kernel: TransitionKernel) -> float:
        return estimate_kernel_lipschitz(
            kernel, q, cost, problem.states, problem.actions, workers=workers
        )

    L_r = fixed.get("L_r")
    if L_r is None:
        L_r = estimate_reward_lipschitz(problem)
    L_center = fixed.get("L_center")
    if L_center is None:
        L_center = kernel_constant(problem.center)

    true_kernel = problem.true_kernel
    if true_kernel is None:
        notes.append("no true kernel: certified against the center kernel")
        true_kernel = problem.center
    L_P = fixed.get("L_P")
    if L_P is None:
        if true_kernel == problem.center and "L_center" not in fixed:
            L_P = L_center
        else:
            L_P = kernel_constant(true_kernel)

    if problem.has_true_kernel:
        membership_ok, distance = check_membership(problem)
    else:
        membership_ok, distance = True, 0.0
    centered = true_kernel == problem.center or distance <= CENTERED_TOL

    alpha, epsilon = problem.alpha, problem.ambiguity.epsilon
    C_P = compute_C_P(problem, L_center, force_unbounded_formula)
    contraction_ok = alpha * L_P < 1.0
    if contraction_ok:
        bound = theorem_bound(L_r, L_P, alpha, epsilon, centered)
    else:
        notes.append("alpha * L_P >= 1: the bound's series diverges")
        bound = math.inf

    report = CertificateReport(
        estimates=LipschitzEstimates(
            L_r=float(L_r),
            L_P=float(L_P),
            L_center=float(L_center),
            overridden=tuple(name for name in OVERRIDABLE if name in fixed),
        ),
        C_P=C_P,
        alpha_ok=alpha < 1.0 / C_P,
        contraction_ok=contraction_ok,
        membership_ok=membership_ok,
        max_membership_distance=float(distance),
        bound=bound,
        centered=bool(centered),
        has_true_kernel=problem.has_true_kernel,
        epsilon=epsilon,
        alpha=alpha,
        q=q,
        notes=tuple(notes),
    )
    logger.info(
        "certificate: L_r=%.6g L_P=%.6g centered=%s bound=%.6g ok=%s",
        report.estimates.L_r,
        report.estimates.L_P,
        report.centered,
        report.bound,
        report.all_ok,
    )
    return report

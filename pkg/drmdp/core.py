"""
Core - connects the solvers and the certificate into a single
RobustMDPSolver class (nominal, robust, worst-case kernel, bound and
optional Q-learning)

Usage:
    from drmdp import AmbiguityConfig, RobustMDPSolver, coin_toss_problem

    problem = coin_toss_problem(0.45, AmbiguityConfig(q=1, epsilon=0.1))
    solver = RobustMDPSolver(problem)
    solver.value_gap()            # V^true - V, one entry per state
    solver.certificate().bound    # 0.263636...
"""

from typing import List, Optional

import numpy as np

from .bellman import (
    FIXED,
    NOMINAL,
    ROBUST,
    FixedPointReport,
    Policy,
    QFunction,
    extract_policy,
    extract_worst_case_kernel,
    value_iteration,
)
from .certify import CertificateReport, certify
from .mdp_core import AmbiguityConfig, ProblemSpec, TransitionKernel
from .qlearn import LearningConfig, greedy_value, robust_q_learning
from .utils import (
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    DEFAULT_WORKERS,
    env_float,
    env_int,
    load_env,
)


class RobustMDPSolver:
    """
    Main class for one robust MDP instance.

    Every result is computed on first use and cached.
    """

    DEFAULT_TOL = DEFAULT_TOL
    DEFAULT_MAX_ITER = DEFAULT_MAX_ITER
    DEFAULT_WORKERS = DEFAULT_WORKERS
    DEFAULT_SEED = DEFAULT_SEED

    def __init__(
        self,
        problem: ProblemSpec,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
        workers: Optional[int] = None,
        seed: Optional[int] = None,
        strict: bool = True,
    ):
        """
        Initializer for RobustMDPSolver.

        Args:
            problem: Validated problem instance
            tol: Fixed-point error target (fallback to DRMDP_TOL / default)
            max_iter: Value-iteration cap (fallback to DRMDP_MAX_ITER)
            workers: Threads per robust sweep (fallback to DRMDP_WORKERS)
            seed: Q-learning seed (fallback to DRMDP_SEED)
            strict: Raise NonConvergence instead of returning flagged reports
        """
        load_env()
        self.problem = problem
        self.tol = tol if tol is not None else env_float("DRMDP_TOL", self.DEFAULT_TOL)
        self.max_iter = (
            max_iter
            if max_iter is not None
            else env_int("DRMDP_MAX_ITER", self.DEFAULT_MAX_ITER)
        )
        self.workers = (
            workers
            if workers is not None
            else env_int("DRMDP_WORKERS", self.DEFAULT_WORKERS)
        )
        self.seed = seed if seed is not None else env_int("DRMDP_SEED", self.DEFAULT_SEED)
        self.strict = strict

        self._nominal: Optional[FixedPointReport] = None
        self._robust: Optional[FixedPointReport] = None
        self._worst_kernel: Optional[TransitionKernel] = None
        self._certificate: Optional[CertificateReport] = None
        self._learned: Optional[QFunction] = None

    def nominal(self) -> FixedPointReport:
        """V^true (value under P^true, or P_hat without a true kernel)."""
        if self._nominal is None:
            self._nominal = value_iteration(
                self.problem,
                mode=NOMINAL,
                tol=self.tol,
                max_iter=self.max_iter,
                strict=self.strict,
            )
        return self._nominal

    def robust(self) -> FixedPointReport:
        """V, the robust fixed point."""
        if self._robust is None:
            self._robust = value_iteration(
                self.problem,
                mode=ROBUST,
                tol=self.tol,
                max_iter=self.max_iter,
                workers=self.workers,
                strict=self.strict,
            )
        return self._robust

    def worst_case_kernel(self) -> TransitionKernel:
        """P^wc at the robust fixed point."""
        if self._worst_kernel is None:
            self._worst_kernel = extract_worst_case_kernel(
                self.problem, self.robust().value
            )
        return self._worst_kernel

    def worst_case_value(self) -> FixedPointReport:
        """Fixed point of the Bellman operator under P^wc (equals V)."""
        return value_iteration(
            self.problem,
            mode=FIXED,
            kernel=self.worst_case_kernel(),
            tol=self.tol,
            max_iter=self.max_iter,
            strict=self.strict,
        )

    def certificate(self) -> CertificateReport:
        if self._certificate is None:
            self._certificate = certify(self.problem, workers=self.workers)
        return self._certificate

    def value_gap(self) -> np.ndarray:
        """V^true(x) - V(x) for every state."""
        return self.nominal().value.values - self.robust().value.values

    def tightness(self) -> np.ndarray:
        """Per-state share of the bound used by the actual gap."""
        return self.certificate().tightness(
            self.nominal().value, self.robust().value
        )

    def policy(self, mode: str = ROBUST) -> Policy:
        report = self.robust() if mode == ROBUST else self.nominal()
        return extract_policy(self.problem, mode, report.value)

    def learn(
        self, config: Optional[LearningConfig] = None, verbose: bool = False
    ) -> QFunction:
        """
        Robust Q-learning on this problem. Without a config the solver's
        seed and the default budget are used; the last result is cached.
        """
        if config is None and self._learned is not None:
            return self._learned
        learned = robust_q_learning(
            self.problem, config or LearningConfig(seed=self.seed), verbose=verbose
        )
        if config is None:
            self._learned = learned
        return learned

    def learned_value_error(self, config: Optional[LearningConfig] = None) -> float:
        """Sup-norm distance between the learned greedy value and V."""
        learned = greedy_value(self.learn(config))
        return learned.sup_distance(self.robust().value)

    def with_epsilon(self, epsilon: float) -> "RobustMDPSolver":
        """New solver for the same problem with another ball radius."""
        problem = self.problem.with_ambiguity(
            AmbiguityConfig(q=self.problem.ambiguity.q, epsilon=epsilon)
        )
        return RobustMDPSolver(
            problem,
            tol=self.tol,
            max_iter=self.max_iter,
            workers=self.workers,
            seed=self.seed,
            strict=self.strict,
        )

    def sweep(self, epsilons: List[float]) -> List["RobustMDPSolver"]:
        """One solver per radius, in the given order."""
        return [self.with_epsilon(epsilon) for epsilon in epsilons]

    def __repr__(self) -> str:
        return (
            f"RobustMDPSolver(problem={self.problem!r}, tol={self.tol}, "
            f"max_iter={self.max_iter}, workers={self.workers}, "
            f"seed={self.seed})"
        )

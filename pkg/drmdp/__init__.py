"""
Solves finite distributionally robust MDPs with Wasserstein-ball ambiguity
sets and certifies the gap to the nominal value function.
"""

from .bellman import (
    FixedPointReport,
    Policy,
    QFunction,
    ValueFunction,
    extract_policy,
    extract_worst_case_kernel,
    value_iteration,
)
from .certify import CertificateReport, LipschitzEstimates, certify, theorem_bound
from .core import RobustMDPSolver
from .errors import DRMDPError
from .mdp_core import (
    ActionSpace,
    AmbiguityConfig,
    DiscreteDistribution,
    ProblemSpec,
    RewardTable,
    StateSpace,
    TransitionKernel,
    build_problem,
    coin_toss_problem,
)
from .qlearn import LearningConfig, robust_q_learning
from .transport import wasserstein_distance, worst_case_expectation

__version__ = "0.1.0"
__author__ = "all_in()"

__all__ = [
    "RobustMDPSolver",
    "ActionSpace",
    "AmbiguityConfig",
    "DiscreteDistribution",
    "ProblemSpec",
    "RewardTable",
    "StateSpace",
    "TransitionKernel",
    "build_problem",
    "coin_toss_problem",
    "wasserstein_distance",
    "worst_case_expectation",
    "ValueFunction",
    "QFunction",
    "Policy",
    "FixedPointReport",
    "value_iteration",
    "extract_policy",
    "extract_worst_case_kernel",
    "LipschitzEstimates",
    "CertificateReport",
    "certify",
    "theorem_bound",
    "LearningConfig",
    "robust_q_learning",
    "DRMDPError",
    "__version__",
]

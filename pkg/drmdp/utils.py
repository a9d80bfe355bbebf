"""Constants and helper functions for drmdp."""

import os
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.spatial.distance import cdist


# =============================================================================
# Tolerances
# =============================================================================

# Distributions read from files may deviate from unit sum by this much
INPUT_SUM_TOL: float = 1e-9
# Unit sum maintained internally
SUM_TOL: float = 1e-12
# Weights below -NEGATIVE_TOL are rejected, the rest are clipped to zero
NEGATIVE_TOL: float = 1e-12
# Coupling marginals
MARGINAL_TOL: float = 1e-9
# Worst-case measures must lie in the ball with this margin
BALL_TOL: float = 1e-7
# P^true(x, a) inside the ball around P_hat(x, a)
MEMBERSHIP_TOL: float = 1e-9
# Kernel equality for the centered case of the bound
CENTERED_TOL: float = 1e-12
# Relative tolerance used for argmin / argmax ties
TIE_TOL: float = 1e-12


# =============================================================================
# Solver defaults
# =============================================================================

DEFAULT_TOL: float = 1e-9
DEFAULT_MAX_ITER: int = 10_000
DEFAULT_WORKERS: int = 1
DEFAULT_SEED: int = 0

# Name of the generator behind torch.Generator on CPU
RNG_ALGORITHM: str = "mt19937"

# Coin-toss experiment
COIN_TOSS_ALPHA: float = 0.45
DEFAULT_EPSILONS: List[float] = [round(0.05 * k, 2) for k in range(11)]

# CSV output
CSV_HEADER: List[str] = [
    "epsilon",
    "x0",
    "v_true",
    "v_robust",
    "diff",
    "bound",
    "ratio",
]
SIGNIFICANT_DIGITS: int = 12


# =============================================================================
# Helper functions
# =============================================================================


def format_real(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """
    Format a real with `digits` significant digits, never in scientific
    notation. Trailing zeros are trimmed; negative zero prints as "0".
    """
    value = float(value)
    if value == 0.0:
        return "0"
    return np.format_float_positional(
        value, precision=digits, unique=False, fractional=False, trim="-"
    )


def distance_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of `points`."""
    return cdist(points, points, metric="euclidean")


def load_env(env_path: str = ".env") -> None:
    """
    Load variables from .env file if it exists (no extra dependencies).
    """
    path = Path(env_path)
    if not path.exists():
        return

    for line in path.read_text().splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, value = stripped.split("=", 1)
        os.environ.setdefault(key.strip(), value.strip())


def env_float(name: str, default: float) -> float:
    """Read a float from the environment, falling back to `default`."""
    raw: Optional[str] = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        print(f"[config] Ignoring {name}={raw!r}: not a number.")
        return default


def env_int(name: str, default: int) -> int:
    """Read an integer from the environment, falling back to `default`."""
    raw: Optional[str] = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        print(f"[config] Ignoring {name}={raw!r}: not an integer.")
        return default

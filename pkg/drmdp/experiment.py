"""
Gap-versus-bound experiment: V^true - V against the certified bound for a
grid of ball radii, and its CSV output.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Union

from tqdm import tqdm

from .bellman import NOMINAL, ROBUST, value_iteration
from .certify import certify
from .errors import ValidationError
from .mdp_core import AmbiguityConfig, ProblemSpec, coin_toss_problem
from .utils import (
    COIN_TOSS_ALPHA,
    CSV_HEADER,
    DEFAULT_EPSILONS,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    format_real,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ExperimentRow:
    epsilon: float
    x0_index: int
    v_true: float
    v_robust: float
    diff: float
    bound: float
    ratio: float

    def as_fields(self) -> List[str]:
        return [
            format_real(self.epsilon),
            str(self.x0_index),
            format_real(self.v_true),
            format_real(self.v_robust),
            format_real(self.diff),
            format_real(self.bound),
            format_real(self.ratio),
        ]


def _check_epsilons(epsilons: Sequence[float]) -> List[float]:
    checked = []
    for epsilon in epsilons:
        epsilon = float(epsilon)
        if not math.isfinite(epsilon) or epsilon < 0.0:
            raise ValidationError(
                f"ball radii must be finite and >= 0, got {epsilon}"
            )
        checked.append(epsilon)
    return checked


def _rows_for_epsilon(
    problem: ProblemSpec,
    v_true,
    epsilon: float,
    states: Sequence[int],
    tol: float,
    max_iter: int,
) -> List[ExperimentRow]:
    instance = problem.with_ambiguity(epsilon=epsilon)
    robust = value_iteration(instance, mode=ROBUST, tol=tol, max_iter=max_iter)
    bound = certify(instance).bound
    rows = []
    for x0 in states:
        diff = v_true[x0] - robust.value[x0]
        ratio = diff / bound if bound > 0.0 and math.isfinite(bound) else 0.0
        rows.append(
            ExperimentRow(
                epsilon=epsilon,
                x0_index=int(x0),
                v_true=v_true[x0],
                v_robust=robust.value[x0],
                diff=diff,
                bound=bound,
                ratio=ratio,
            )
        )
    return rows


def run_experiment(
    problem: ProblemSpec,
    epsilons: Sequence[float],
    states: Optional[Sequence[int]] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    workers: int = 1,
    verbose: bool = False,
) -> List[ExperimentRow]:
    """
    Solve the nominal fixed point once, then the robust fixed point and the
    certificate for every radius. Radii are independent and run on
    `workers` threads.

    Args:
        problem: Problem whose ambiguity radius is replaced per row group
        epsilons: Ball radii
        states: Initial states to report (default: all)
        tol: Fixed-point error target
        max_iter: Value-iteration cap
        workers: Number of radii solved concurrently
        verbose: Show progress bar

    Returns:
        Rows sorted by (epsilon, x0)
    """
    epsilons = _check_epsilons(epsilons)
    states = list(range(problem.n_states)) if states is None else list(states)
    v_true = value_iteration(problem, mode=NOMINAL, tol=tol, max_iter=max_iter).value

    rows: List[ExperimentRow] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        future_to_epsilon = {
            executor.submit(
                _rows_for_epsilon, problem, v_true, epsilon, states, tol, max_iter
            ): epsilon
            for epsilon in epsilons
        }

        iterator: Iterator = as_completed(future_to_epsilon)
        if verbose:
            iterator = tqdm(
                iterator,
                total=len(epsilons),
                desc="Robust fixed points",
                unit="epsilon",
            )

        for future in iterator:
            rows.extend(future.result())

    rows.sort(key=lambda row: (row.epsilon, row.x0_index))
    logger.info("experiment finished: %d radii, %d rows", len(epsilons), len(rows))
    return rows


def run_cointoss_experiment(
    alpha: float = COIN_TOSS_ALPHA,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    q: int = 1,
    tol: float = DEFAULT_TOL,
    all_states: bool = False,
    workers: int = 1,
    verbose: bool = False,
    n_coins: int = 10,
) -> List[ExperimentRow]:
    """
    The coin-toss experiment: one row per radius and initial state.

    By default only x0 in {0, ..., n_coins // 2} is reported, the other half
    mirrors it (diff(x0) = diff(n_coins - x0)).
    """
    problem = coin_toss_problem(alpha, AmbiguityConfig(q=q), n_coins=n_coins)
    states = None if all_states else range(n_coins // 2 + 1)
    return run_experiment(
        problem,
        epsilons,
        states=states,
        tol=tol,
        workers=workers,
        verbose=verbose,
    )


def format_csv(rows: Iterable[ExperimentRow]) -> str:
    """Header plus one line per row, in (epsilon, x0) order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=lambda row: (row.epsilon, row.x0_index)):
        writer.writerow(row.as_fields())
    return buffer.getvalue()


def emit_csv(rows: Iterable[ExperimentRow], path: PathLike) -> None:
    """
    Write the experiment rows to `path`.

    Raises:
        RuntimeError: the file could not be written
    """
    content = format_csv(rows)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(content)
    except OSError as e:
        raise RuntimeError(f"Could not write file {path}") from e

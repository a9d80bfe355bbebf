"""
Command-line front end.

    drmdp cointoss --epsilons 0,0.1,0.2 --out cointoss.csv
    drmdp solve --problem problems/cointoss.json --mode robust
    drmdp certify --problem problems/cointoss.json --strict
    drmdp bound --lr 1 --lp 0 --alpha 0.45 --epsilon 0.1 --centered

Exit codes: 0 ok, 2 invalid input, 3 value iteration did not converge,
4 failed assumption check (certify --strict).
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .bellman import NOMINAL, ROBUST
from .certify import CertificateReport, certify, theorem_bound
from .core import RobustMDPSolver
from .errors import DRMDPError, NonConvergence
from .experiment import emit_csv, format_csv, run_cointoss_experiment
from .problem_io import load_problem
from .qlearn import LearningConfig, greedy_policy, greedy_value
from .utils import (
    COIN_TOSS_ALPHA,
    DEFAULT_EPSILONS,
    DEFAULT_TOL,
    env_float,
    env_int,
    format_real,
    load_env,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_ASSUMPTIONS = 4

QLEARN = "qlearn"


def _epsilon_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"Niepoprawna lista promieni: {text!r}"
        ) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drmdp",
        description="Odporne (Wasserstein) procesy decyzyjne Markowa: "
        "rozwiązania, certyfikat i eksperyment z rzutem monetą.",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Wypisuj logi postępu (poziom INFO).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cointoss = commands.add_parser(
        "cointoss", help="Eksperyment z rzutem monetą (CSV: różnica vs. ograniczenie)."
    )
    cointoss.add_argument("--alpha", type=float, default=COIN_TOSS_ALPHA)
    cointoss.add_argument(
        "--epsilons",
        type=_epsilon_list,
        default=DEFAULT_EPSILONS,
        help="Promienie kul oddzielone przecinkami (domyślnie 0,0.05,...,0.5).",
    )
    cointoss.add_argument("--q", type=int, default=1, help="Rząd odległości Wassersteina.")
    cointoss.add_argument("--tol", type=float, default=None)
    cointoss.add_argument(
        "--all-states",
        action="store_true",
        help="Raportuj wszystkie stany początkowe 0..10 (domyślnie 0..5).",
    )
    cointoss.add_argument("--workers", type=int, default=None)
    cointoss.add_argument("--out", type=Path, default=None, help="Plik wyjściowy CSV.")

    solve = commands.add_parser("solve", help="Rozwiąż problem z pliku JSON.")
    solve.add_argument("--problem", type=Path, required=True)
    solve.add_argument(
        "--mode", choices=[NOMINAL, ROBUST, QLEARN], default=ROBUST
    )
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--episodes", type=int, default=None)
    solve.add_argument("--steps-per-episode", type=int, default=None)
    solve.add_argument("--out", type=Path, default=None, help="Plik wyjściowy CSV.")

    certify = commands.add_parser(
        "certify", help="Sprawdź założenia i policz ograniczenie różnicy."
    )
    certify.add_argument("--problem", type=Path, required=True)
    certify.add_argument("--out", type=Path, default=None, help="Raport JSON.")
    certify.add_argument(
        "--strict",
        action="store_true",
        help="Kod wyjścia 4, gdy któreś założenie nie jest spełnione.",
    )
    certify.add_argument(
        "--force-unbounded-formula",
        action="store_true",
        help="Licz C_P pełnym wzorem zamiast gałęzi dla ograniczonej nagrody.",
    )

    bound = commands.add_parser("bound", help="Wartość ograniczenia dla podanych stałych.")
    bound.add_argument("--lr", type=float, required=True)
    bound.add_argument("--lp", type=float, required=True)
    bound.add_argument("--alpha", type=float, required=True)
    bound.add_argument("--epsilon", type=float, required=True)
    bound.add_argument("--centered", action="store_true")
    return parser


def _write(content: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(content)
        return
    try:
        out.write_text(content, encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"Could not write file {out}") from e


def _run_cointoss(args: argparse.Namespace) -> int:
    tol = args.tol if args.tol is not None else env_float("DRMDP_TOL", DEFAULT_TOL)
    workers = args.workers if args.workers is not None else env_int("DRMDP_WORKERS", 1)
    rows = run_cointoss_experiment(
        alpha=args.alpha,
        epsilons=args.epsilons,
        q=args.q,
        tol=tol,
        all_states=args.all_states,
        workers=workers,
        verbose=args.verbose,
    )
    if args.out is None:
        sys.stdout.write(format_csv(rows))
    else:
        emit_csv(rows, args.out)
    return EXIT_OK


def _run_solve(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    solver = RobustMDPSolver(
        problem, tol=args.tol, max_iter=args.max_iter, seed=args.seed
    )

    buffer = io.StringIO()
    if args.mode == QLEARN:
        defaults = LearningConfig()
        config = LearningConfig(
            episodes=args.episodes if args.episodes is not None else defaults.episodes,
            steps_per_episode=(
                args.steps_per_episode
                if args.steps_per_episode is not None
                else defaults.steps_per_episode
            ),
            seed=solver.seed,
        )
        learned = solver.learn(config, verbose=args.verbose)
        values = greedy_value(learned).values
        actions = greedy_policy(learned)
        buffer.write(f"# {config.describe()}\n")
    else:
        report = solver.robust() if args.mode == ROBUST else solver.nominal()
        values = report.value.values
        actions = solver.policy(args.mode).action_index

    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["state", "value", "action"])
    for state, (value, action) in enumerate(zip(values, actions)):
        writer.writerow([state, format_real(value), int(action)])
    _write(buffer.getvalue(), args.out)
    return EXIT_OK


def _print_report(report: CertificateReport) -> None:
    estimates = report.estimates
    print("=" * 60)
    print("  CERTYFIKAT")
    print("=" * 60)
    print(f"  L_r       = {format_real(estimates.L_r)}")
    print(f"  L_P       = {format_real(estimates.L_P)}")
    print(f"  L_center  = {format_real(estimates.L_center)}")
    if estimates.overridden:
        print(f"  (podane ręcznie: {', '.join(estimates.overridden)})")
    print(f"  C_P       = {format_real(report.C_P)}")
    print(f"  alpha < 1/C_P         : {'OK' if report.alpha_ok else 'NIE'}")
    print(f"  alpha * L_P < 1       : {'OK' if report.contraction_ok else 'NIE'}")
    print(
        f"  P^true w kuli         : {'OK' if report.membership_ok else 'NIE'} "
        f"(max odległość {format_real(report.max_membership_distance)})"
    )
    print(f"  przypadek centrowany  : {'TAK' if report.centered else 'NIE'}")
    bound = format_real(report.bound) if math.isfinite(report.bound) else "inf"
    print(f"  ograniczenie          : {bound}")
    for note in report.notes:
        print(f"  [certify] {note}")


def _run_certify(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    report = certify(problem, force_unbounded_formula=args.force_unbounded_formula)
    _print_report(report)
    if args.out is not None:
        _write(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    if args.strict and not report.all_ok:
        return EXIT_ASSUMPTIONS
    return EXIT_OK


def _run_bound(args: argparse.Namespace) -> int:
    value = theorem_bound(args.lr, args.lp, args.alpha, args.epsilon, args.centered)
    print(format_real(value))
    return EXIT_OK


COMMANDS = {
    "cointoss": _run_cointoss,
    "solve": _run_solve,
    "certify": _run_certify,
    "bound": _run_bound,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_env()
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="[%(name)s] %(message)s")

    try:
        return COMMANDS[args.command](args)
    except NonConvergence as exc:
        print(f"[drmdp] Brak zbieżności: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except DRMDPError as exc:
        print(f"[drmdp] Błąd danych: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"[drmdp] Błąd: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""
Demo of the drmdp library on the coin-toss betting problem.

Solves the nominal and the robust problem for a grid of ball radii and
compares the actual gap V^true - V with the certified bound:
- results/cointoss.csv - one row per (epsilon, x0)
"""

import os
from typing import List

from drmdp import AmbiguityConfig, RobustMDPSolver, coin_toss_problem
from drmdp.experiment import ExperimentRow, emit_csv, run_cointoss_experiment
from drmdp.utils import DEFAULT_EPSILONS


def print_table(rows: List[ExperimentRow]) -> None:
    """Gap, bound and ratio per radius for the initial state x0 = 0."""
    print(f"  {'epsilon':>8}  {'V^true':>10}  {'V':>10}  {'różnica':>10}  "
          f"{'ograniczenie':>12}  {'iloraz':>7}")
    print("-" * 68)
    for row in rows:
        if row.x0_index != 0:
            continue
        print(
            f"  {row.epsilon:>8.2f}  {row.v_true:>10.6f}  {row.v_robust:>10.6f}  "
            f"{row.diff:>10.6f}  {row.bound:>12.6f}  {row.ratio:>7.2%}"
        )


def demo_single_radius(epsilon: float = 0.1):
    """
    Demo of the solver class for one radius.
    """
    problem = coin_toss_problem(0.45, AmbiguityConfig(q=1, epsilon=epsilon))
    solver = RobustMDPSolver(problem)

    print("=" * 68)
    print(f"PROBLEM: {problem!r}")
    print("-" * 40)
    certificate = solver.certificate()
    print(f"  L_r = {certificate.estimates.L_r:g}, L_P = {certificate.estimates.L_P:g}")
    print(f"  Założenia spełnione: {'tak' if certificate.all_ok else 'nie'}")
    print(f"  Ograniczenie: {certificate.bound:.6f}")
    print()

    policy = solver.policy()
    gap = solver.value_gap()
    print("  x0   V^true(x0)   V(x0)      akcja")
    for x in range(problem.n_states):
        action = problem.actions.points[policy[x], 0]
        print(
            f"  {x:>2}   {solver.nominal().value[x]:.6f}     "
            f"{solver.robust().value[x]:.6f}   {action:+.0f}   (różnica {gap[x]:.6f})"
        )
    print()


def main():
    """Main demo function."""

    print("=" * 68)
    print("  DEMONSTRACJA BIBLIOTEKI DRMDP: RZUT MONETĄ")
    print("=" * 68)
    print()

    demo_single_radius()

    print("🎲 Liczę punkty stałe dla promieni 0, 0.05, ..., 0.5...")
    rows = run_cointoss_experiment(epsilons=DEFAULT_EPSILONS, all_states=True)
    print(f"   Policzono {len(rows)} wierszy")
    print()

    print("📊 RÓŻNICA A OGRANICZENIE (x0 = 0):")
    print("=" * 68)
    print_table(rows)
    print()

    script_dir = os.path.dirname(os.path.abspath(__file__))
    out_dir = os.path.join(script_dir, "results")
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, "cointoss.csv")
    emit_csv(rows, out_path)
    print(f"💾 Zapisano {out_path}")

    worst = max(rows, key=lambda row: row.ratio)
    print()
    print(
        f"📈 Największe wykorzystanie ograniczenia: {worst.ratio:.2%} "
        f"(epsilon = {worst.epsilon:g}, x0 = {worst.x0_index})"
    )
    print()
    print("✅ Demonstracja zakończona!")
    print()


if __name__ == "__main__":
    main()

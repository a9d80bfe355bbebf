#!/usr/bin/env python3
"""
Example usage of the drmdp library.

Run this script to see how the robust solver works:
    python example.py
"""

from drmdp import (
    AmbiguityConfig,
    LearningConfig,
    RobustMDPSolver,
    coin_toss_problem,
    theorem_bound,
)
from drmdp.problem_io import load_problem

if __name__ == "__main__":
    print("=" * 60)
    print("drmdp - Example Usage")
    print("=" * 60)
    print()

    # The same problem can be read from problems/cointoss.json
    problem = coin_toss_problem(0.45, AmbiguityConfig(q=1, epsilon=0.1))
    assert load_problem("problems/cointoss.json").isclose(problem)

    solver = RobustMDPSolver(problem)
    print(f"Solver ready: {solver}")
    print()

    print("--- Value functions ---")
    nominal = solver.nominal()
    robust = solver.robust()
    print(f"Nominal: {nominal.iterations} sweeps, V^true(0) = {nominal.value[0]:.6f}")
    print(f"Robust:  {robust.iterations} sweeps, V(0)      = {robust.value[0]:.6f}")
    print()

    print("--- Certificate ---")
    report = solver.certificate()
    print(f"L_r = {report.estimates.L_r:g}, L_P = {report.estimates.L_P:g}, "
          f"centered = {report.centered}")
    print(f"Bound: {report.bound:.6f}  (max gap {solver.value_gap().max():.6f})")
    print(f"Same bound from the constants: "
          f"{theorem_bound(1.0, 0.0, 0.45, 0.1, centered=True):.6f}")
    print()

    print("--- Worst-case kernel ---")
    worst = solver.worst_case_kernel()
    print(f"P^wc(0, +1) = {[round(w, 4) for w in worst[0, 2].weights]}")
    print()

    print("--- Radius sweep ---")
    for other in solver.sweep([0.0, 0.25, 0.5]):
        print(f"epsilon = {other.problem.ambiguity.epsilon:<5} "
              f"max gap = {other.value_gap().max():.6f}")
    print()

    print("--- Robust Q-learning ---")
    learned = solver.learn(LearningConfig(episodes=500, seed=1))
    print(f"Q(0, .) = {learned.values[0].round(4).tolist()}")
    print()

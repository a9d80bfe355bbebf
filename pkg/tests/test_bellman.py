"""
Testy operatorów Bellmana, iteracji wartości i jądra najgorszego przypadku.

Uruchomienie:
    pytest tests/test_bellman.py -v
"""

import numpy as np
import pytest

from conftest import TOL, random_problem
from drmdp.utils import BALL_TOL


def _zero_reward(problem):
    from drmdp.mdp_core import RewardTable, build_problem

    return build_problem(
        problem.states,
        problem.actions,
        problem.center,
        problem.true_kernel,
        RewardTable(np.zeros_like(problem.reward.values)),
        problem.alpha,
        problem.ambiguity,
    )


class TestOperators:
    """Testy pojedynczego kroku operatorów."""

    def test_nominal_from_zero(self, cointoss, binomial_tails):
        """Test T^true 0 = g dla rzutu monetą."""
        from drmdp.bellman import nominal_bellman_apply

        _, g = binomial_tails
        v = nominal_bellman_apply(cointoss, cointoss.true_kernel, np.zeros(11))
        np.testing.assert_allclose(v.values, g, atol=1e-15)
        assert v[5] == pytest.approx(0.0, abs=1e-15)

    def test_zero_reward_keeps_zero(self, cointoss_at):
        """Test że przy r = 0 wszystkie operatory zachowują v = 0."""
        from drmdp.bellman import (
            fixed_kernel_bellman_apply,
            nominal_bellman_apply,
            robust_bellman_apply,
        )

        problem = _zero_reward(cointoss_at(0.5))
        zero = np.zeros(11)
        assert np.all(nominal_bellman_apply(problem, problem.center, zero).values == 0.0)
        assert np.all(fixed_kernel_bellman_apply(problem, problem.center, zero).values == 0.0)
        v, _ = robust_bellman_apply(problem, zero)
        np.testing.assert_allclose(v.values, 0.0, atol=1e-15)

    def test_robust_below_nominal(self, cointoss, rng):
        """Test T v <= T^true v, gdy P^true = P_hat."""
        from drmdp.bellman import nominal_bellman_apply, robust_bellman_apply

        for _ in range(20):
            v = rng.uniform(-2.0, 2.0, 11)
            robust, _ = robust_bellman_apply(cointoss, v)
            nominal = nominal_bellman_apply(cointoss, cointoss.center, v)
            assert np.all(robust.values <= nominal.values + 1e-12)

    def test_workers_give_same_sweep(self, cointoss, rng):
        """Test że podział stanów między wątki nie zmienia wyniku."""
        from drmdp.bellman import robust_bellman_apply

        v = rng.uniform(-1.0, 1.0, 11)
        serial, kernel_serial = robust_bellman_apply(cointoss, v, workers=1)
        parallel, kernel_parallel = robust_bellman_apply(cointoss, v, workers=4)
        np.testing.assert_array_equal(serial.values, parallel.values)
        assert kernel_serial == kernel_parallel

    def test_wrong_vector_length(self, cointoss):
        """Test wektora wartości o złej długości."""
        from drmdp.bellman import robust_bellman_apply
        from drmdp.errors import DimensionMismatch

        with pytest.raises(DimensionMismatch):
            robust_bellman_apply(cointoss, np.zeros(5))

    def test_contraction(self, rng):
        """Test ||T u - T v|| <= alpha ||u - v|| na 1000 losowych parach."""
        from drmdp.bellman import (
            fixed_kernel_bellman_apply,
            nominal_bellman_apply,
            robust_bellman_apply,
        )

        for i in range(1000):
            problem = random_problem(rng, with_true_kernel=bool(i % 2), q=1 + i % 2)
            u = rng.uniform(-3.0, 3.0, problem.n_states)
            v = rng.uniform(-3.0, 3.0, problem.n_states)
            gap = float(np.max(np.abs(u - v)))
            kernel = problem.center if problem.true_kernel is None else problem.true_kernel

            operators = (
                lambda w: nominal_bellman_apply(problem, kernel, w),
                lambda w: fixed_kernel_bellman_apply(problem, problem.center, w),
                lambda w: robust_bellman_apply(problem, w)[0],
            )
            for apply in operators:
                assert apply(u).sup_distance(apply(v)) <= problem.alpha * gap + 1e-10


class TestValueIteration:
    """Testy iteracji wartości."""

    def test_closed_form_nominal(self, cointoss, binomial_tails):
        """Test V^true(x) = g(x) + alpha E[g(B)] / (1 - alpha)."""
        from drmdp.bellman import NOMINAL, value_iteration

        pmf, g = binomial_tails
        alpha = cointoss.alpha
        expected = g + alpha * float(np.dot(pmf, g)) / (1.0 - alpha)
        report = value_iteration(cointoss, NOMINAL, tol=TOL)
        assert report.converged
        np.testing.assert_allclose(report.value.values, expected, atol=1e-8)

    def test_stopping_rule(self, cointoss):
        """Test progu zatrzymania tol (1 - alpha) / (2 alpha)."""
        from drmdp.bellman import NOMINAL, value_iteration

        report = value_iteration(cointoss, NOMINAL, tol=1e-6)
        assert report.threshold == pytest.approx(1e-6 * 0.55 / 0.9)
        assert report.residual <= report.threshold
        assert report.iterations == len(report.residuals)

    def test_residuals_contract(self, cointoss):
        """Test że kolejne residua maleją co najmniej o czynnik alpha."""
        from drmdp.bellman import ROBUST, value_iteration

        report = value_iteration(cointoss, ROBUST, tol=TOL)
        residuals = np.array(report.residuals)
        assert np.all(residuals[1:] <= cointoss.alpha * residuals[:-1] + 1e-12)

    def test_large_radius_gives_zero(self, cointoss_at):
        """Test że dla epsilon = 20 wartość odporna jest zerowa."""
        from drmdp.bellman import ROBUST, value_iteration

        report = value_iteration(cointoss_at(20.0), ROBUST, tol=TOL)
        np.testing.assert_allclose(report.value.values, 0.0, atol=1e-12)

    def test_zero_radius_collapse_cointoss(self, cointoss_at):
        """Test że dla epsilon = 0 wartość odporna to wartość dla P_hat."""
        from drmdp.bellman import FIXED, ROBUST, value_iteration

        problem = cointoss_at(0.0)
        robust = value_iteration(problem, ROBUST, tol=TOL).value
        fixed = value_iteration(problem, FIXED, tol=TOL, kernel=problem.center).value
        assert robust.sup_distance(fixed) <= 2 * TOL

    def test_zero_radius_collapse_random(self, rng):
        """Test zbieżności do wartości dla P_hat na 100 losowych problemach."""
        from drmdp.bellman import FIXED, ROBUST, value_iteration

        for i in range(100):
            problem = random_problem(rng, epsilon=0.0, q=1 + i % 2, dim=1 + i % 2)
            robust = value_iteration(problem, ROBUST, tol=TOL).value
            fixed = value_iteration(problem, FIXED, tol=TOL, kernel=problem.center).value
            assert robust.sup_distance(fixed) <= 2 * TOL

    def test_robust_below_true(self, cointoss_at):
        """Test V <= V^true (P^true leży w kuli)."""
        from drmdp.bellman import NOMINAL, ROBUST, value_iteration

        v_true = value_iteration(cointoss_at(0.0), NOMINAL, tol=TOL).value.values
        for epsilon in (0.1, 0.5, 2.0):
            v_robust = value_iteration(cointoss_at(epsilon), ROBUST, tol=TOL).value.values
            assert np.all(v_robust <= v_true + 2 * TOL)

    def test_monotone_in_radius(self, cointoss_at):
        """Test że wartość odporna nie rośnie wraz z promieniem."""
        from drmdp.bellman import ROBUST, value_iteration

        previous = None
        for epsilon in (0.0, 0.1, 0.25, 0.5, 1.0, 2.0):
            v = value_iteration(cointoss_at(epsilon), ROBUST, tol=TOL).value.values
            if previous is not None:
                assert np.all(v <= previous + 2 * TOL)
            previous = v

    def test_non_convergence_raises(self, cointoss):
        """Test wyjątku po wyczerpaniu max_iter."""
        from drmdp.bellman import NOMINAL, value_iteration
        from drmdp.errors import NonConvergence

        with pytest.raises(NonConvergence) as exc_info:
            value_iteration(cointoss, NOMINAL, max_iter=1)
        assert exc_info.value.report.iterations == 1
        assert not exc_info.value.report.converged

    def test_non_strict_returns_flagged_report(self, cointoss):
        """Test raportu z flagą converged=False w trybie nieścisłym."""
        from drmdp.bellman import NOMINAL, value_iteration

        report = value_iteration(cointoss, NOMINAL, max_iter=2, strict=False)
        assert not report.converged
        assert report.iterations == 2

    def test_fixed_mode_needs_kernel(self, cointoss):
        """Test trybu fixed bez jądra."""
        from drmdp.bellman import FIXED, value_iteration
        from drmdp.errors import ValidationError

        with pytest.raises(ValidationError):
            value_iteration(cointoss, FIXED)

    def test_unknown_mode(self, cointoss):
        """Test nieznanego trybu."""
        from drmdp.bellman import value_iteration
        from drmdp.errors import ValidationError

        with pytest.raises(ValidationError):
            value_iteration(cointoss, "optimistic")

    def test_iterate_matches_sweeps(self, cointoss):
        """Test że iterate zwraca kolejne iteracje operatora."""
        from drmdp.bellman import NOMINAL, iterate, value_iteration

        iterates = list(iterate(cointoss, NOMINAL, 3))
        report = value_iteration(cointoss, NOMINAL, max_iter=3, strict=False)
        assert len(iterates) == 3
        np.testing.assert_array_equal(iterates[-1].values, report.value.values)


class TestPolicyAndWorstCase:
    """Testy polityki zachłannej i jądra najgorszego przypadku."""

    def test_nominal_policy_bets(self, cointoss):
        """Test zakładu +1 w stanie 0 i -1 w stanie 10."""
        from drmdp.bellman import NOMINAL, extract_policy, value_iteration

        v = value_iteration(cointoss, NOMINAL, tol=TOL).value
        policy = extract_policy(cointoss, NOMINAL, v)
        assert policy[0] == 2
        assert policy[10] == 0
        # all actions tie at the median, lowest index wins
        assert policy[5] == 0

    def test_robust_policy_bets(self, cointoss):
        """Test polityki odpornej na krańcach."""
        from drmdp.bellman import ROBUST, extract_policy, value_iteration

        v = value_iteration(cointoss, ROBUST, tol=TOL).value
        policy = extract_policy(cointoss, ROBUST, v)
        assert len(policy) == 11
        assert policy[0] == 2
        assert policy[10] == 0

    def test_worst_case_kernel_in_ball(self, cointoss_at):
        """Test że P^wc(x, a) leży w kuli wokół P_hat(x, a) dla wszystkich 33 par."""
        from drmdp.bellman import ROBUST, extract_worst_case_kernel, value_iteration
        from drmdp.transport import wasserstein_distance

        problem = cointoss_at(0.5)
        v_star = value_iteration(problem, ROBUST, tol=TOL).value
        worst = extract_worst_case_kernel(problem, v_star)
        for x in range(problem.n_states):
            for a in range(problem.n_actions):
                d = wasserstein_distance(problem.center[x, a], worst[x, a], 1, problem.cost)
                assert d <= 0.5 + BALL_TOL

    def test_worst_case_kernel_is_invariant(self, cointoss_at):
        """Test T^wc V* = V* z dokładnością 2 tol."""
        from drmdp.bellman import (
            ROBUST,
            extract_worst_case_kernel,
            fixed_kernel_bellman_apply,
            value_iteration,
        )

        for epsilon in (0.1, 0.5, 1.0):
            problem = cointoss_at(epsilon)
            v_star = value_iteration(problem, ROBUST, tol=TOL).value
            worst = extract_worst_case_kernel(problem, v_star)
            image = fixed_kernel_bellman_apply(problem, worst, v_star)
            assert image.sup_distance(v_star) <= 2 * TOL

    def test_worst_case_kernel_order_two(self, cointoss_at):
        """Test kuli W_2."""
        from drmdp.bellman import ROBUST, extract_worst_case_kernel, value_iteration
        from drmdp.transport import wasserstein_distance

        problem = cointoss_at(0.5, q=2)
        v_star = value_iteration(problem, ROBUST, tol=TOL).value
        worst = extract_worst_case_kernel(problem, v_star)
        for x in (0, 5, 10):
            for a in range(problem.n_actions):
                d = wasserstein_distance(problem.center[x, a], worst[x, a], 2, problem.cost)
                assert d <= 0.5 + BALL_TOL

    def test_zero_radius_kernel_is_center(self, cointoss_at):
        """Test że dla epsilon = 0 jądro najgorszego przypadku to dokładnie P_hat."""
        from drmdp.bellman import ROBUST, extract_worst_case_kernel, value_iteration

        problem = cointoss_at(0.0)
        v_star = value_iteration(problem, ROBUST, tol=TOL).value
        worst = extract_worst_case_kernel(problem, v_star)
        assert worst == problem.center


class TestOperatorProperties:
    """Testy monotoniczności i ograniczeń funkcji wartości."""

    def test_monotone(self, rng):
        """Test v <= w  =>  T v <= T w dla operatora nominalnego i odpornego."""
        from drmdp.bellman import nominal_bellman_apply, robust_bellman_apply

        for i in range(200):
            problem = random_problem(rng, q=1 + i % 2)
            v = rng.uniform(-3.0, 3.0, problem.n_states)
            w = v + rng.uniform(0.0, 1.0, problem.n_states)
            assert np.all(
                nominal_bellman_apply(problem, problem.center, v).values
                <= nominal_bellman_apply(problem, problem.center, w).values + 1e-12
            )
            assert np.all(
                robust_bellman_apply(problem, v)[0].values
                <= robust_bellman_apply(problem, w)[0].values + 1e-12
            )

    def test_values_within_bound(self, cointoss_at):
        """Test |V(x)| <= max|r| / (1 - alpha) dla obu trybów."""
        from drmdp.bellman import NOMINAL, ROBUST, value_iteration

        for epsilon in (0.0, 0.5, 3.0):
            problem = cointoss_at(epsilon)
            for mode in (NOMINAL, ROBUST):
                v = value_iteration(problem, mode, tol=TOL).value
                assert np.all(np.abs(v.values) <= problem.value_bound + TOL)

    def test_iterates_stay_lipschitz(self, cointoss):
        """Test stałej Lipschitza kolejnych iteracji nominalnych (n <= 20)."""
        from drmdp.bellman import NOMINAL, iterate
        from drmdp.certify import iterate_lipschitz_bound

        x = np.arange(11, dtype=float)
        gaps = np.abs(x[:, None] - x[None, :])
        off_diagonal = gaps > 0
        for n, v in enumerate(iterate(cointoss, NOMINAL, 20), start=1):
            spread = np.abs(v.values[:, None] - v.values[None, :])
            ratio = spread[off_diagonal] / gaps[off_diagonal]
            assert ratio.max() <= iterate_lipschitz_bound(1.0, 0.0, 0.45, n) + 1e-12

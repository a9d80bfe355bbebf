"""
Podstawowe testy dla biblioteki drmdp.

Uruchomienie:
    pytest tests/test_basic.py -v
"""

import numpy as np
import pytest

from conftest import TOL


class TestLibraryImport:
    """Testy importu biblioteki."""

    def test_import_main_module(self):
        """Test importu głównego modułu."""
        import drmdp

        assert hasattr(drmdp, "__version__")

    def test_import_solver_class(self):
        """Test importu klasy RobustMDPSolver."""
        from drmdp import RobustMDPSolver

        assert RobustMDPSolver is not None

    def test_public_names(self):
        """Test że wszystkie nazwy z __all__ istnieją."""
        import drmdp

        for name in drmdp.__all__:
            assert hasattr(drmdp, name), name


class TestRobustMDPSolver:
    """Podstawowe testy klasy RobustMDPSolver."""

    @pytest.fixture
    def solver(self, cointoss):
        """Fixture tworząca solver dla rzutu monetą."""
        from drmdp import RobustMDPSolver

        return RobustMDPSolver(cointoss, tol=TOL)

    def test_initialization(self, solver):
        """Test domyślnych ustawień."""
        assert solver.tol == TOL
        assert solver.max_iter == solver.DEFAULT_MAX_ITER
        assert solver.strict is True

    def test_repr(self, solver):
        """Test reprezentacji tekstowej."""
        repr_str = repr(solver)
        assert "RobustMDPSolver" in repr_str
        assert "n_states=11" in repr_str

    def test_env_settings(self, cointoss, monkeypatch):
        """Test odczytu ustawień ze zmiennych środowiskowych."""
        from drmdp import RobustMDPSolver

        monkeypatch.setenv("DRMDP_TOL", "1e-6")
        monkeypatch.setenv("DRMDP_SEED", "42")
        solver = RobustMDPSolver(cointoss)
        assert solver.tol == 1e-6
        assert solver.seed == 42
        # explicit arguments win over the environment
        assert RobustMDPSolver(cointoss, tol=1e-3).tol == 1e-3

    def test_results_are_cached(self, solver):
        """Test że wyniki są liczone raz."""
        assert solver.robust() is solver.robust()
        assert solver.certificate() is solver.certificate()

    def test_value_gap(self, solver):
        """Test 0 <= V^true - V <= ograniczenie."""
        gap = solver.value_gap()
        assert gap.shape == (11,)
        assert np.all(gap >= -2 * TOL)
        assert np.all(gap <= solver.certificate().bound + 2 * TOL)
        assert np.all(solver.tightness() <= 1.0 + 1e-8)

    def test_worst_case_value(self, solver):
        """Test że punkt stały dla P^wc to V."""
        v_wc = solver.worst_case_value().value
        assert v_wc.sup_distance(solver.robust().value) <= 2 * TOL

    def test_policy(self, solver):
        """Test polityki odpornej."""
        policy = solver.policy()
        assert policy[0] == 2
        assert policy[10] == 0

    def test_sweep(self, solver):
        """Test kopii solvera dla kilku promieni."""
        solvers = solver.sweep([0.0, 0.2])
        assert [s.problem.ambiguity.epsilon for s in solvers] == [0.0, 0.2]
        assert solvers[0].tol == solver.tol
        assert solver.problem.ambiguity.epsilon == 0.1

    def test_learn_small_budget(self, solver):
        """Test Q-learningu z małym budżetem."""
        from drmdp import LearningConfig

        learned = solver.learn(LearningConfig(episodes=20))
        assert learned.values.shape == (11, 3)

    def test_learned_value_error(self, solver):
        """Test błędu wartości zachłannej względem V dla małego budżetu."""
        from drmdp import LearningConfig
        from drmdp.qlearn import greedy_value

        config = LearningConfig(episodes=20)
        expected = greedy_value(solver.learn(config)).sup_distance(solver.robust().value)
        assert solver.learned_value_error(config) == pytest.approx(expected)
        assert solver.learned_value_error(config) >= 0.0

    def test_learned_value_error_default_budget(self, solver):
        """Test że domyślny budżet daje błąd poniżej 0.05."""
        assert solver.learned_value_error() <= 0.05

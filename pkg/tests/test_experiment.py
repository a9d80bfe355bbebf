"""
Testy eksperymentu z rzutem monetą i formatu CSV.

Uruchomienie:
    pytest tests/test_experiment.py -v
"""

import numpy as np
import pytest

from conftest import TOL

GRID = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]


@pytest.fixture(scope="module")
def full_grid():
    """Wiersze dla wszystkich 11 stanów i siatki promieni 0..0.5."""
    from drmdp.experiment import run_cointoss_experiment

    return run_cointoss_experiment(epsilons=GRID, all_states=True, tol=TOL, workers=2)


class TestCoinTossExperiment:
    """Testy wyników eksperymentu."""

    def test_row_count_and_order(self, full_grid):
        """Test 11 x 11 wierszy posortowanych po (epsilon, x0)."""
        assert len(full_grid) == 121
        keys = [(row.epsilon, row.x0_index) for row in full_grid]
        assert keys == sorted(keys)

    def test_gap_within_bound(self, full_grid):
        """Test 0 <= V^true - V <= ograniczenie dla każdego wiersza."""
        for row in full_grid:
            assert row.diff >= -2 * TOL
            assert row.diff <= row.bound + 2 * TOL

    def test_bound_values(self, full_grid):
        """Test ograniczenia eps * 1.45 / 0.55 w przypadku centrowanym."""
        for row in full_grid:
            assert row.bound == pytest.approx(row.epsilon * 1.45 / 0.55, abs=1e-12)

    def test_symmetry(self, full_grid):
        """Test diff(x0) = diff(10 - x0)."""
        by_key = {(row.epsilon, row.x0_index): row.diff for row in full_grid}
        for epsilon in GRID:
            for x0 in range(11):
                assert by_key[(epsilon, x0)] == pytest.approx(
                    by_key[(epsilon, 10 - x0)], abs=2 * TOL
                )

    def test_zero_radius_rows(self, full_grid):
        """Test zerowej różnicy, ograniczenia i ilorazu dla epsilon = 0."""
        for row in full_grid:
            if row.epsilon == 0.0:
                assert row.diff == pytest.approx(0.0, abs=2 * TOL)
                assert row.bound == 0.0
                assert row.ratio == 0.0

    def test_gap_grows_with_radius(self, full_grid):
        """Test że różnica rośnie wraz z promieniem."""
        diffs = np.array([row.diff for row in full_grid]).reshape(len(GRID), 11)
        assert np.all(np.diff(diffs, axis=0) >= -2 * TOL)

    def test_default_states(self):
        """Test domyślnych stanów 0..5."""
        from drmdp.experiment import run_cointoss_experiment

        rows = run_cointoss_experiment(epsilons=[0.1])
        assert [row.x0_index for row in rows] == [0, 1, 2, 3, 4, 5]

    def test_negative_radius(self):
        """Test ujemnego promienia na liście."""
        from drmdp.errors import ValidationError
        from drmdp.experiment import run_cointoss_experiment

        with pytest.raises(ValidationError):
            run_cointoss_experiment(epsilons=[0.1, -0.2])

    def test_generic_problem(self, rng):
        """Test eksperymentu na losowym problemie bez jądra prawdziwego."""
        from conftest import random_problem
        from drmdp.experiment import run_experiment

        problem = random_problem(rng, n_states=5, n_actions=2)
        rows = run_experiment(problem, [0.0, 0.3, 1.0], tol=TOL)
        assert len(rows) == 15
        for row in rows:
            assert row.diff >= -2 * TOL


class TestCsv:
    """Testy formatu CSV."""

    def test_empty_rows(self, tmp_path):
        """Test pliku z samym nagłówkiem."""
        from drmdp.experiment import emit_csv

        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text(encoding="utf-8") == "epsilon,x0,v_true,v_robust,diff,bound,ratio\n"

    def test_single_row(self, tmp_path):
        """Test jednego wiersza: dwie linie."""
        from drmdp.experiment import ExperimentRow, emit_csv

        row = ExperimentRow(
            epsilon=0.1,
            x0_index=3,
            v_true=1.25,
            v_robust=1.0,
            diff=0.25,
            bound=0.5,
            ratio=0.5,
        )
        path = tmp_path / "one.csv"
        emit_csv([row], path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[1] == "0.1,3,1.25,1,0.25,0.5,0.5"

    def test_no_scientific_notation(self):
        """Test zapisu liczb bez notacji wykładniczej."""
        from drmdp.utils import format_real

        assert format_real(1.5e-10) == "0.00000000015"
        assert format_real(-0.0) == "0"
        assert format_real(2.0 / 3.0) == "0.666666666667"

    def test_unwritable_path(self, tmp_path):
        """Test błędu zapisu do nieistniejącego katalogu."""
        from drmdp.experiment import emit_csv

        with pytest.raises(RuntimeError, match="Could not write file"):
            emit_csv([], tmp_path / "missing" / "rows.csv")

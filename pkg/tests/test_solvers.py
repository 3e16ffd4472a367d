from unittest.mock import patch

import numpy as np
import pytest

from app.models.solver_models import AnnealSchedule
from app.services.cost import cost_total
from app.services.sbf import reachable_states
from app.services.solvers import (
    dfs_solve,
    ga_solve,
    initial_state,
    metropolis_accept,
    sa_solve,
    sa_solve_restarts,
)
from app.utils.config import settings
from app.utils.exceptions import BudgetExceededError
from tests.conftest import bits_of, make_scenario, state_of

DDRR = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]


@pytest.fixture
def short_schedule():
    return AnnealSchedule(t_initial=5.0, t_final=0.05, decay=0.8, steps_per_temperature=40)


class TestDfs:
    def test_2x2_tie_goes_to_smallest_bits(self, grid_2x2):
        result = dfs_solve(grid_2x2)
        assert result.best_cost.total == pytest.approx(2.0)
        expected = state_of(grid_2x2, [(0, 0), (1, 0), (1, 1)])
        assert np.array_equal(result.best_state.bits, expected.bits)

    def test_obstacle_3x3_optimum(self, obstacles_3x3):
        result = dfs_solve(obstacles_3x3)
        assert np.array_equal(result.best_state.bits[0], bits_of(obstacles_3x3, DDRR))
        assert result.best_cost.total == pytest.approx(1.2)

    def test_counts_and_history(self, grid_3x3):
        result = dfs_solve(grid_3x3)
        assert result.extras["path_counts"] == [len(reachable_states(grid_3x3, 0))]
        assert result.evaluations == 12
        totals = [total for _, total in result.history]
        assert totals == sorted(totals, reverse=True)
        assert totals[-1] == pytest.approx(result.best_cost.total)

    def test_budget_exceeded(self, grid_3x3):
        with patch.object(settings, "DFS_COMBINATION_BUDGET", 1):
            with pytest.raises(BudgetExceededError):
                dfs_solve(grid_3x3)

    def test_two_robots_product(self):
        scenario = make_scenario(2, 2, [((0, 0), (1, 1)), ((0, 1), (1, 0))])
        result = dfs_solve(scenario)
        assert result.extras["path_counts"] == [2, 2]
        assert result.evaluations == 4


class TestMetropolis:
    @pytest.mark.parametrize("delta", [-3.0, -1e-12, 0.0])
    def test_downhill_and_flat_always_accepted(self, delta):
        assert metropolis_accept(delta, 0.0, np.random.default_rng(0))

    def test_uphill_at_zero_temperature_rejected(self):
        assert not metropolis_accept(0.5, 0.0, np.random.default_rng(0))

    def test_uphill_rates(self):
        rng = np.random.default_rng(3)
        accepted = sum(metropolis_accept(1.0, 1.0, rng) for _ in range(4000))
        assert accepted / 4000 == pytest.approx(np.exp(-1.0), abs=0.03)
        assert not any(metropolis_accept(100.0, 0.01, rng) for _ in range(100))


class TestSimulatedAnnealing:
    def test_finds_3x3_optimum(self, obstacles_3x3):
        result = sa_solve(obstacles_3x3, seed=7)
        assert result.best_cost.total == pytest.approx(dfs_solve(obstacles_3x3).best_cost.total)

    def test_deterministic_per_seed(self, obstacles_3x3, short_schedule):
        a = sa_solve(obstacles_3x3, short_schedule, seed=4)
        b = sa_solve(obstacles_3x3, short_schedule, seed=4)
        assert a.history == b.history
        assert np.array_equal(a.best_state.bits, b.best_state.bits)

    def test_history_starts_at_l_path(self, obstacles_3x3, short_schedule):
        result = sa_solve(obstacles_3x3, short_schedule, seed=1)
        step, total = result.history[0]
        assert step == 0
        assert total == pytest.approx(cost_total(initial_state(obstacles_3x3), obstacles_3x3).total)
        assert result.extras["accepted"] <= result.evaluations

    def test_single_cell_grid_freezes(self):
        scenario = make_scenario(1, 3, [((0, 0), (0, 2))])
        result = sa_solve(scenario, seed=0)
        assert result.extras["frozen"]
        assert result.evaluations == 0
        assert np.array_equal(result.best_state.bits, initial_state(scenario).bits)

    def test_restarts_keep_best(self, obstacles_3x3, short_schedule):
        result = sa_solve_restarts(obstacles_3x3, short_schedule, seed=10, restarts=3, max_workers=2)
        runs = result.extras["restarts"]
        assert [r["seed"] for r in runs] == [10, 11, 12]
        assert result.best_cost.total == pytest.approx(min(r["best_total"] for r in runs))


class TestGenetic:
    def test_finds_3x3_optimum(self, obstacles_3x3):
        result = ga_solve(obstacles_3x3, seed=0)
        assert np.array_equal(result.best_state.bits[0], bits_of(obstacles_3x3, DDRR))

    def test_zero_generations_returns_l_path(self, obstacles_3x3):
        result = ga_solve(obstacles_3x3, generations=0)
        assert np.array_equal(result.best_state.bits, initial_state(obstacles_3x3).bits)
        assert len(result.history) == 1

    def test_elitism(self, two_robots_4x4):
        result = ga_solve(two_robots_4x4, population_size=6, generations=8, seed=2)
        totals = [total for _, total in result.history]
        assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))

    def test_deterministic_per_seed(self, two_robots_4x4):
        a = ga_solve(two_robots_4x4, population_size=5, generations=4, seed=9)
        b = ga_solve(two_robots_4x4, population_size=5, generations=4, seed=9)
        assert a.history == b.history
        assert np.array_equal(a.best_state.bits, b.best_state.bits)

    def test_2x2_reaches_optimum_in_one_generation(self, grid_2x2):
        result = ga_solve(grid_2x2, generations=1, seed=0)
        assert result.best_cost.total == pytest.approx(dfs_solve(grid_2x2).best_cost.total)

    def test_invalid_population(self, grid_2x2):
        with pytest.raises(ValueError):
            ga_solve(grid_2x2, population_size=0)


@pytest.mark.slow
class TestAgainstExhaustiveSearch:
    def test_sa_best_of_five_on_4x4(self, two_robots_4x4):
        optimum = dfs_solve(two_robots_4x4).best_cost.total
        best = sa_solve_restarts(two_robots_4x4, None, seed=11, restarts=5)
        assert best.best_cost.total == pytest.approx(optimum, abs=1e-9)

    def test_sa_best_of_five_on_5x5(self, two_robots_5x5):
        optimum = dfs_solve(two_robots_5x5).best_cost.total
        best = sa_solve_restarts(two_robots_5x5, None, seed=13, restarts=5)
        assert best.best_cost.total == pytest.approx(optimum, abs=1e-9)

    def test_ga_on_4x4(self, two_robots_4x4):
        optimum = dfs_solve(two_robots_4x4).best_cost.total
        assert ga_solve(two_robots_4x4, seed=11).best_cost.total >= optimum - 1e-9

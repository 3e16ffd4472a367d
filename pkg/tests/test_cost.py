import itertools

import numpy as np
import pytest

from app.models.scenario_models import PathState
from app.services.cost import (
    CostTracker,
    batch_cost_total,
    cost_c1,
    cost_c2,
    cost_c3,
    cost_total,
    coverage_summary,
    target_degrees,
)
from app.services.grid import graph_of
from app.utils.exceptions import ScenarioError
from tests.conftest import make_scenario, state_of


class TestEdgeWeightTerm:
    def test_two_normal_edges(self, grid_2x2):
        state = state_of(grid_2x2, [(0, 0), (0, 1), (1, 1)])
        assert cost_c1(state, grid_2x2) == -2.0

    def test_all_zero_state(self, grid_3x3):
        assert cost_c1(PathState.zeros(grid_3x3), grid_3x3) == 0.0

    def test_one_obstacle_and_three_normal_edges(self):
        scenario = make_scenario(3, 3, [((0, 0), (2, 2))], obstacles=[(0, 2)])
        state = state_of(scenario, [(0, 0), (1, 0), (1, 1), (0, 1), (0, 2)])
        assert cost_c1(state, scenario) == 7.0


class TestBalanceTerm:
    def test_single_robot(self, grid_3x3):
        state = state_of(grid_3x3, [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)])
        assert cost_c2(state, grid_3x3) == 0.0

    def test_two_robots_lengths_two_and_four(self):
        scenario = make_scenario(3, 3, [((0, 0), (0, 2)), ((2, 0), (2, 2))])
        state = state_of(
            scenario,
            [(0, 0), (0, 1), (0, 2)],
            [(2, 0), (1, 0), (1, 1), (2, 1), (2, 2)],
        )
        assert cost_c2(state, scenario) == 4.0

    def test_three_equal_lengths(self):
        scenario = make_scenario(3, 3, [((0, 0), (0, 2)), ((1, 0), (1, 2)), ((2, 0), (2, 2))])
        state = state_of(
            scenario,
            [(0, 0), (0, 1), (0, 2)],
            [(1, 0), (1, 1), (1, 2)],
            [(2, 0), (2, 1), (2, 2)],
        )
        assert cost_c2(state, scenario) == 0.0


class TestDegreeTerm:
    def test_target_degrees(self, grid_3x3):
        target = target_degrees(grid_3x3)
        assert target[0] == 1 and target[8] == 1
        assert all(t == 2 for t in target[1:8])

    def test_shared_endpoint_counts_twice(self):
        scenario = make_scenario(3, 3, [((0, 0), (2, 2)), ((0, 0), (2, 0))])
        assert target_degrees(scenario)[0] == 2

    def test_l_path_on_2x2(self, grid_2x2):
        # (1,0) is untouched: (0 - 2)^2
        state = state_of(grid_2x2, [(0, 0), (0, 1), (1, 1)])
        assert cost_c3(state, grid_2x2) == 4.0

    def test_hamiltonian_path_has_zero_degree_cost(self, grid_3x3):
        walk = [(0, 0), (0, 1), (0, 2), (1, 2), (1, 1), (1, 0), (2, 0), (2, 1), (2, 2)]
        assert cost_c3(state_of(grid_3x3, walk), grid_3x3) == 0.0


class TestTotal:
    def test_breakdown(self, grid_2x2):
        state = state_of(grid_2x2, [(0, 0), (0, 1), (1, 1)])
        breakdown = cost_total(state, grid_2x2)
        assert (breakdown.c1, breakdown.c2, breakdown.c3, breakdown.total) == (-2.0, 0.0, 4.0, 2.0)

    def test_zero_alphas(self):
        scenario = make_scenario(2, 2, [((0, 0), (1, 1))], alphas=(0.0, 0.0, 0.0))
        assert cost_total(state_of(scenario, [(0, 0), (1, 0), (1, 1)]), scenario).total == 0.0

    def test_only_edge_weights(self):
        scenario = make_scenario(2, 2, [((0, 0), (1, 1))], alphas=(1.0, 0.0, 0.0))
        state = state_of(scenario, [(0, 0), (1, 0), (1, 1)])
        breakdown = cost_total(state, scenario)
        assert breakdown.total == breakdown.c1

    def test_dimension_mismatch(self, grid_2x2, grid_3x3):
        with pytest.raises(ScenarioError):
            cost_total(PathState.zeros(grid_3x3), grid_2x2)

    def test_batch_matches_single(self, two_robots_4x4):
        rng = np.random.default_rng(5)
        bits = rng.random((16, two_robots_4x4.robots, two_robots_4x4.num_edges)) < 0.4
        totals = batch_cost_total(bits, two_robots_4x4)
        for k in range(16):
            expected = cost_total(PathState(bits=bits[k]), two_robots_4x4).total
            assert totals[k] == pytest.approx(expected, abs=1e-9)


class TestCostTracker:
    """Incremental deltas must agree with full recomputation."""

    def test_single_bit_flips(self, two_robots_4x4):
        rng = np.random.default_rng(1)
        state = PathState(bits=rng.random((two_robots_4x4.robots, two_robots_4x4.num_edges)) < 0.5)
        tracker = CostTracker(two_robots_4x4, state)
        for robot, edge in itertools.product(range(two_robots_4x4.robots), range(two_robots_4x4.num_edges)):
            before = cost_total(tracker.state(), two_robots_4x4).total
            delta = tracker.flip_delta(robot, [edge])
            flipped = tracker.bits.copy()
            flipped[robot, edge] = not flipped[robot, edge]
            after = cost_total(PathState(bits=flipped), two_robots_4x4).total
            assert delta == pytest.approx(after - before, abs=1e-9)

    def test_flip_updates_components(self, two_robots_4x4):
        tracker = CostTracker(two_robots_4x4, PathState.zeros(two_robots_4x4))
        rng = np.random.default_rng(2)
        for _ in range(50):
            robot = int(rng.integers(two_robots_4x4.robots))
            edges = [int(e) for e in rng.choice(two_robots_4x4.num_edges, size=4, replace=False)]
            tracker.flip(robot, edges)
            expected = cost_total(tracker.state(), two_robots_4x4)
            assert tracker.c1 == pytest.approx(expected.c1)
            assert tracker.c2 == pytest.approx(expected.c2)
            assert tracker.c3 == pytest.approx(expected.c3)
            assert tracker.total == pytest.approx(expected.total)

    def test_flip_delta_does_not_mutate(self, grid_3x3):
        tracker = CostTracker(grid_3x3, PathState.zeros(grid_3x3))
        tracker.flip_delta(0, [0, 1, 2])
        assert not tracker.bits.any()
        assert tracker.total == cost_total(PathState.zeros(grid_3x3), grid_3x3).total


class TestCoverageSummary:
    def test_two_robots_sharing_a_node(self):
        scenario = make_scenario(3, 3, [((0, 0), (2, 0)), ((0, 2), (2, 2))], obstacles=[(1, 2)])
        state = state_of(
            scenario,
            [(0, 0), (1, 0), (1, 1), (2, 1), (2, 0)],
            [(0, 2), (0, 1), (1, 1), (2, 1), (2, 2)],
        )
        summary = coverage_summary(state, scenario)
        assert summary["viewpoints"] == 9
        assert summary["viewpoints_covered"] == 8
        assert summary["overlapping_nodes"] == 2
        assert summary["obstacle_edges_used"] == 0
        assert summary["path_lengths"] == [4.0, 4.0]

    def test_counts_obstacle_edges(self):
        scenario = make_scenario(3, 3, [((0, 0), (2, 2))], obstacles=[(1, 1)])
        state = state_of(scenario, [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)])
        assert coverage_summary(state, scenario)["obstacle_edges_used"] == 2
        assert graph_of(scenario).num_nodes == 9

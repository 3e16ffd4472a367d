"""Composite objective ``c = a0*c1 + a1*c2 + a2*c3`` over joint path states.

The cost is defined on arbitrary bit matrices, not only valid paths, so the
same numbers drive the classical solvers and the QAOA phase separator.
"""

from functools import lru_cache
from typing import Dict, Iterable, List, Tuple

import numpy as np

from app.models.scenario_models import GridScenario, PathState
from app.models.solver_models import CostBreakdown
from app.services.grid import graph_of
from app.utils.exceptions import ScenarioError


@lru_cache(maxsize=64)
def target_degrees(scenario: GridScenario) -> np.ndarray:
    """Required joint degree per node: k for a node ending k robot paths, else 2."""
    graph = graph_of(scenario)
    counts = np.zeros(graph.num_nodes, dtype=np.int64)
    is_endpoint = np.zeros(graph.num_nodes, dtype=bool)
    for source, dest in scenario.endpoints:
        s, d = graph.node_id(source), graph.node_id(dest)
        is_endpoint[s] = is_endpoint[d] = True
        if s != d:
            counts[s] += 1
            counts[d] += 1
    target = np.where(is_endpoint, counts, 2)
    target.flags.writeable = False
    return target


@lru_cache(maxsize=64)
def _weights(scenario: GridScenario) -> Tuple[np.ndarray, np.ndarray]:
    w = np.asarray(scenario.edge_weights, dtype=np.float64)
    d = np.asarray(scenario.edge_lengths, dtype=np.float64)
    w.flags.writeable = False
    d.flags.writeable = False
    return w, d


def _check(state: PathState, scenario: GridScenario) -> np.ndarray:
    if state.bits.shape != (scenario.robots, scenario.num_edges):
        raise ScenarioError(
            f"State shape {state.bits.shape} does not match "
            f"{scenario.robots} robots x {scenario.num_edges} edges"
        )
    return state.bits.astype(np.float64)


def batch_components(
    bits: np.ndarray, scenario: GridScenario
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(c1, c2, c3) for a stack of joint states shaped ``(K, robots, edges)``."""
    x = np.asarray(bits, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (scenario.robots, scenario.num_edges):
        raise ScenarioError(
            f"Batch shape {x.shape} does not match (K, {scenario.robots}, {scenario.num_edges})"
        )
    w, d = _weights(scenario)
    graph = graph_of(scenario)

    c1 = (x @ w).sum(axis=1)
    lengths = x @ d
    c2 = ((lengths[:, :-1] - lengths[:, 1:]) ** 2).sum(axis=1)
    degrees = x.sum(axis=1) @ graph.incidence.T
    c3 = ((degrees - target_degrees(scenario)) ** 2).sum(axis=1)
    return c1, c2, c3


def batch_cost_total(bits: np.ndarray, scenario: GridScenario) -> np.ndarray:
    c1, c2, c3 = batch_components(bits, scenario)
    a0, a1, a2 = scenario.alphas
    return a0 * c1 + a1 * c2 + a2 * c3


def cost_c1(state: PathState, scenario: GridScenario) -> float:
    """Sum of edge weights over every robot's active edges."""
    x = _check(state, scenario)
    w, _ = _weights(scenario)
    return float((x @ w).sum())


def cost_c2(state: PathState, scenario: GridScenario) -> float:
    """Squared length differences between consecutive robot indices."""
    x = _check(state, scenario)
    _, d = _weights(scenario)
    lengths = x @ d
    return float(((lengths[:-1] - lengths[1:]) ** 2).sum())


def cost_c3(state: PathState, scenario: GridScenario) -> float:
    """Squared deviation of each node's joint degree from its target degree."""
    x = _check(state, scenario)
    degrees = graph_of(scenario).incidence @ x.sum(axis=0)
    return float(((degrees - target_degrees(scenario)) ** 2).sum())


def cost_total(state: PathState, scenario: GridScenario) -> CostBreakdown:
    c1 = cost_c1(state, scenario)
    c2 = cost_c2(state, scenario)
    c3 = cost_c3(state, scenario)
    a0, a1, a2 = scenario.alphas
    return CostBreakdown(c1=c1, c2=c2, c3=c3, total=a0 * c1 + a1 * c2 + a2 * c3)


class CostTracker:
    """Incremental objective for a mutable joint state.

    Keeps per-robot lengths, per-node joint degrees and c1 so that flipping a
    few edges of one robot costs O(flipped edges + robots).
    """

    def __init__(self, scenario: GridScenario, state: PathState):
        x = _check(state, scenario)
        self.scenario = scenario
        self.graph = graph_of(scenario)
        self.weights, self.lengths_per_edge = _weights(scenario)
        self.target = target_degrees(scenario)
        self.bits = state.bits.copy()
        self.lengths = x @ self.lengths_per_edge
        self.degrees = (self.graph.incidence @ x.sum(axis=0)).astype(np.int64)
        self.c1 = float((x @ self.weights).sum())
        self.c2 = float(((self.lengths[:-1] - self.lengths[1:]) ** 2).sum())
        self.c3 = float(((self.degrees - self.target) ** 2).sum())

    @property
    def total(self) -> float:
        a0, a1, a2 = self.scenario.alphas
        return a0 * self.c1 + a1 * self.c2 + a2 * self.c3

    def state(self) -> PathState:
        return PathState(bits=self.bits.copy())

    def breakdown(self) -> CostBreakdown:
        return CostBreakdown(c1=self.c1, c2=self.c2, c3=self.c3, total=self.total)

    def _deltas(self, robot: int, edges: Iterable[int]) -> Tuple[float, float, float, float, Dict[int, int]]:
        d_c1 = 0.0
        d_len = 0.0
        node_delta: Dict[int, int] = {}
        for e in edges:
            sign = -1 if self.bits[robot, e] else 1
            d_c1 += sign * self.weights[e]
            d_len += sign * self.lengths_per_edge[e]
            for node in self.graph.edge_nodes[e]:
                node = int(node)
                node_delta[node] = node_delta.get(node, 0) + sign

        d_c2 = 0.0
        if d_len:
            new_len = self.lengths[robot] + d_len
            if robot > 0:
                prev = self.lengths[robot - 1]
                d_c2 += (prev - new_len) ** 2 - (prev - self.lengths[robot]) ** 2
            if robot < self.scenario.robots - 1:
                nxt = self.lengths[robot + 1]
                d_c2 += (new_len - nxt) ** 2 - (self.lengths[robot] - nxt) ** 2

        d_c3 = 0.0
        for node, delta in node_delta.items():
            old = self.degrees[node] - self.target[node]
            d_c3 += (old + delta) ** 2 - old ** 2
        return d_c1, d_c2, float(d_c3), d_len, node_delta

    def flip_delta(self, robot: int, edges: Iterable[int]) -> float:
        """Change of the weighted total if ``edges`` of ``robot`` were flipped."""
        d_c1, d_c2, d_c3, _, _ = self._deltas(robot, list(edges))
        a0, a1, a2 = self.scenario.alphas
        return a0 * d_c1 + a1 * d_c2 + a2 * d_c3

    def flip(self, robot: int, edges: Iterable[int]) -> float:
        """Flip ``edges`` of ``robot`` in place and return the change of the total."""
        edges = list(edges)
        d_c1, d_c2, d_c3, d_len, node_delta = self._deltas(robot, edges)
        for e in edges:
            self.bits[robot, e] = not self.bits[robot, e]
        self.lengths[robot] += d_len
        for node, delta in node_delta.items():
            self.degrees[node] += delta
        self.c1 += d_c1
        self.c2 += d_c2
        self.c3 += d_c3
        a0, a1, a2 = self.scenario.alphas
        return a0 * d_c1 + a1 * d_c2 + a2 * d_c3


def coverage_summary(state: PathState, scenario: GridScenario) -> Dict[str, object]:
    """Viewpoint coverage, overlap and obstacle usage of a joint state."""
    _check(state, scenario)
    graph = graph_of(scenario)
    visits = np.zeros(graph.num_nodes, dtype=np.int64)
    for robot in range(scenario.robots):
        touched = graph.degrees(state.bits[robot]) > 0
        source, dest = scenario.endpoints[robot]
        touched[graph.node_id(source)] = True
        touched[graph.node_id(dest)] = True
        visits += touched
    obstacle_edges = scenario.obstacle_edges()
    _, d = _weights(scenario)
    lengths: List[float] = [float(v) for v in state.bits.astype(np.float64) @ d]
    return {
        "viewpoints": graph.num_nodes,
        "viewpoints_covered": int((visits > 0).sum()),
        "overlapping_nodes": int((visits > 1).sum()),
        "obstacle_edges_used": int(state.bits[:, obstacle_edges].sum()) if obstacle_edges else 0,
        "path_lengths": lengths,
    }

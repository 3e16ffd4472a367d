"""Grid graph model: canonical edge indexing, incidence and path validity.

Nodes are ``(row, col)`` coordinates, zero-based, row 0 at the top. Edges are
indexed with all horizontal edges first (row-major), then all vertical edges
(row-major), so an ``n x m`` grid has ``m(n-1) + n(m-1)`` edges.
"""

from __future__ import annotations

from functools import lru_cache
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.utils.config import settings
from app.utils.exceptions import BudgetExceededError, InfeasibleScenarioError, ScenarioError

if TYPE_CHECKING:
    from app.models.scenario_models import GridScenario

log = structlog.get_logger(__name__)

Coordinate = Tuple[int, int]


def edge_count(rows: int, cols: int) -> int:
    return cols * (rows - 1) + rows * (cols - 1)


class GridGraph:
    """Immutable geometry of an ``rows x cols`` grid."""

    def __init__(self, rows: int, cols: int):
        if rows < 1 or cols < 1:
            raise ScenarioError(f"Grid dimensions must be positive, got {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.num_nodes = rows * cols
        self.num_edges = edge_count(rows, cols)

        edges: List[Tuple[Coordinate, Coordinate]] = []
        for r in range(rows):
            for c in range(cols - 1):
                edges.append(((r, c), (r, c + 1)))
        for r in range(rows - 1):
            for c in range(cols):
                edges.append(((r, c), (r + 1, c)))
        self.edges: Tuple[Tuple[Coordinate, Coordinate], ...] = tuple(edges)
        self._lookup: Dict[Tuple[Coordinate, Coordinate], int] = {}
        for index, (a, b) in enumerate(edges):
            self._lookup[(a, b)] = index
            self._lookup[(b, a)] = index

        endpoints = np.array(
            [[self.node_id(a), self.node_id(b)] for a, b in edges], dtype=np.int64
        ).reshape(-1, 2)
        endpoints.flags.writeable = False
        self.edge_nodes = endpoints

        incidence = np.zeros((self.num_nodes, self.num_edges), dtype=np.int64)
        for index, (a, b) in enumerate(edges):
            incidence[self.node_id(a), index] = 1
            incidence[self.node_id(b), index] = 1
        incidence.flags.writeable = False
        self.incidence = incidence

        self._incident: Tuple[Tuple[int, ...], ...] = tuple(
            tuple(int(e) for e in np.flatnonzero(incidence[node])) for node in range(self.num_nodes)
        )

    def contains(self, node: Sequence[int]) -> bool:
        return 0 <= node[0] < self.rows and 0 <= node[1] < self.cols

    def require(self, node: Sequence[int]) -> Coordinate:
        if len(node) != 2 or not self.contains(node):
            raise ScenarioError(
                f"Node {tuple(node)} lies outside the {self.rows}x{self.cols} grid"
            )
        return int(node[0]), int(node[1])

    def node_id(self, node: Sequence[int]) -> int:
        return int(node[0]) * self.cols + int(node[1])

    def coordinate(self, node_id: int) -> Coordinate:
        return divmod(int(node_id), self.cols)

    def edge_index(self, node_a: Sequence[int], node_b: Sequence[int]) -> int:
        a, b = self.require(node_a), self.require(node_b)
        index = self._lookup.get((a, b))
        if index is None:
            raise ScenarioError(f"Nodes {a} and {b} are not grid-adjacent")
        return index

    def incident_edges(self, node: Sequence[int]) -> List[int]:
        return list(self._incident[self.node_id(self.require(node))])

    def incident_by_id(self, node_id: int) -> Tuple[int, ...]:
        return self._incident[node_id]

    def neighbours(self, node: Coordinate) -> List[Coordinate]:
        r, c = node
        candidates = ((r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c))
        return [n for n in candidates if self.contains(n)]

    def degrees(self, bits: np.ndarray) -> np.ndarray:
        """Active-edge degree of every node for one bit-vector."""
        return self.incidence @ np.asarray(bits, dtype=np.int64)


@lru_cache(maxsize=64)
def grid_graph(rows: int, cols: int) -> GridGraph:
    return GridGraph(rows, cols)


def graph_of(scenario: "GridScenario") -> GridGraph:
    return grid_graph(scenario.rows, scenario.cols)


def edge_index(scenario: "GridScenario", node_a: Sequence[int], node_b: Sequence[int]) -> int:
    """Canonical index of the edge between two adjacent nodes (order-independent)."""
    return graph_of(scenario).edge_index(node_a, node_b)


def incident_edges(scenario: "GridScenario", node: Sequence[int]) -> List[int]:
    """Edges touching ``node``, sorted by index."""
    return graph_of(scenario).incident_edges(node)


def is_valid_path(
    graph: GridGraph, bits: Sequence[int], source: Sequence[int], dest: Sequence[int]
) -> bool:
    """True iff the active edges form one simple path from ``source`` to ``dest``."""
    bits = np.asarray(bits, dtype=bool)
    if bits.shape != (graph.num_edges,):
        return False
    source = graph.require(source)
    dest = graph.require(dest)
    active = int(bits.sum())
    if source == dest:
        return active == 0
    if active == 0:
        return False

    degrees = graph.degrees(bits)
    src_id, dst_id = graph.node_id(source), graph.node_id(dest)
    if degrees[src_id] != 1 or degrees[dst_id] != 1:
        return False
    inner = np.delete(degrees, [src_id, dst_id])
    if np.any((inner != 0) & (inner != 2)):
        return False

    # With those degrees the walk from source ends at dest; leftover edges are cycles.
    return len(walk_path(graph, bits, source)) - 1 == active


def walk_path(graph: GridGraph, bits: Sequence[int], source: Sequence[int]) -> List[Coordinate]:
    """Follow active edges from ``source`` until the walk cannot continue."""
    bits = np.asarray(bits, dtype=bool)
    current = graph.node_id(graph.require(source))
    visited_edges = set()
    nodes = [graph.coordinate(current)]
    while True:
        step = None
        for e in graph.incident_by_id(current):
            if bits[e] and e not in visited_edges:
                step = e
                break
        if step is None:
            return nodes
        visited_edges.add(step)
        a, b = graph.edge_nodes[step]
        current = int(b if a == current else a)
        nodes.append(graph.coordinate(current))


def path_bits(graph: GridGraph, nodes: Sequence[Coordinate]) -> np.ndarray:
    """Bit-vector of the edges joining consecutive nodes."""
    bits = np.zeros(graph.num_edges, dtype=bool)
    for a, b in zip(nodes, nodes[1:]):
        bits[graph.edge_index(a, b)] = True
    return bits


def enumerate_paths(
    scenario: "GridScenario", robot: int, limit: Optional[int] = None
) -> List[np.ndarray]:
    """Every valid simple path of ``robot`` by backtracking, sorted lexicographically.

    Raises BudgetExceededError once more than ``limit`` paths are found.
    """
    graph = graph_of(scenario)
    limit = settings.PATH_ENUMERATION_LIMIT if limit is None else limit
    source, dest = scenario.endpoints[robot]
    if source == dest:
        return [np.zeros(graph.num_edges, dtype=bool)]

    found: List[np.ndarray] = []
    bits = np.zeros(graph.num_edges, dtype=bool)
    visited = {source}

    def extend(node: Coordinate) -> None:
        if node == dest:
            found.append(bits.copy())
            if len(found) > limit:
                raise BudgetExceededError(
                    f"Robot {robot} has more than {limit} valid paths",
                    {"robot": robot, "limit": limit},
                )
            return
        for nxt in graph.neighbours(node):
            if nxt in visited:
                continue
            e = graph.edge_index(node, nxt)
            visited.add(nxt)
            bits[e] = True
            extend(nxt)
            bits[e] = False
            visited.discard(nxt)

    extend(source)
    if not found:
        raise InfeasibleScenarioError(
            f"Robot {robot} has no valid path from {source} to {dest}",
            {"robot": robot},
        )
    found.sort(key=lambda b: tuple(int(x) for x in b))
    log.debug("Enumerated paths", robot=robot, count=len(found))
    return found

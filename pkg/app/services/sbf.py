"""Simultaneous Bit Flip (SBF) move on four-node sub-grids.

A sub-grid is the unit square a=(i,j), b=(i,j+1), c=(i+1,j+1), d=(i+1,j).
Flipping its four inner edges maps a valid path to another valid path when
the validity function ``f = f1 & f2 & f3`` holds:

* f1: at least one inner edge is active.
* f2: the inner edges are not two parallel segments (0101 / 1010).
* f3: no sub-grid node carries two active outside edges.

Path endpoints count as carrying one extra active outside edge (the link to
their station), which keeps moves closed on paths whose endpoints are not
grid corners.
"""

from collections import deque
from functools import lru_cache
from typing import Deque, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
import structlog

from app.models.scenario_models import GridScenario, SbfMove, SubGrid
from app.services.grid import Coordinate, GridGraph, graph_of, grid_graph, is_valid_path
from app.utils.config import settings
from app.utils.exceptions import BudgetExceededError, ScenarioError, SbfMoveError

log = structlog.get_logger(__name__)

Terminals = Optional[Tuple[Coordinate, Coordinate]]

PARALLEL_PATTERNS = ((False, True, False, True), (True, False, True, False))


@lru_cache(maxsize=64)
def subgrids_of(rows: int, cols: int) -> Tuple[SubGrid, ...]:
    if rows < 2 or cols < 2:
        raise ScenarioError(f"A {rows}x{cols} grid has no four-node sub-grids")
    graph = grid_graph(rows, cols)
    subs = []
    for i in range(rows - 1):
        for j in range(cols - 1):
            a, b, c, d = (i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)
            inner = (
                graph.edge_index(a, b),
                graph.edge_index(b, c),
                graph.edge_index(c, d),
                graph.edge_index(d, a),
            )
            outside = tuple(
                tuple(e for e in graph.incident_edges(node) if e not in inner)
                for node in (a, b, c, d)
            )
            subs.append(
                SubGrid(corner=a, nodes=(a, b, c, d), inner_edges=inner, outside_edges=outside)
            )
    return tuple(subs)


def enumerate_subgrids(scenario: GridScenario) -> List[SubGrid]:
    """All ``(n-1)(m-1)`` sub-grids in row-major corner order."""
    return list(subgrids_of(scenario.rows, scenario.cols))


def f1(inner_bits: Sequence[bool]) -> bool:
    return any(bool(x) for x in inner_bits)


def f2(inner_bits: Sequence[bool]) -> bool:
    return tuple(bool(x) for x in inner_bits) not in PARALLEL_PATTERNS


def f3(outside_bits: Sequence[Sequence[bool]]) -> bool:
    """False iff some node has at least two active outside entries."""
    return all(sum(bool(x) for x in node) < 2 for node in outside_bits)


def _outside_bits(bits: np.ndarray, sub: SubGrid, terminals: Terminals) -> List[List[bool]]:
    per_node = []
    for node, edges in zip(sub.nodes, sub.outside_edges):
        values = [bool(bits[e]) for e in edges]
        if terminals is not None and terminals[0] != terminals[1] and node in terminals:
            values.append(True)
        per_node.append(values)
    return per_node


def sbf_allowed(bits: np.ndarray, sub: SubGrid, terminals: Terminals = None) -> bool:
    """``f1 & f2 & f3`` on one robot's bit-vector.

    ``terminals`` is the robot's ``(source, dest)``; without it only the
    displayed three-clause function is evaluated.
    """
    inner = [bool(bits[e]) for e in sub.inner_edges]
    return f1(inner) and f2(inner) and f3(_outside_bits(bits, sub, terminals))


def apply_sbf(bits: np.ndarray, sub: SubGrid, terminals: Terminals = None) -> np.ndarray:
    """Return a copy of ``bits`` with the four inner edges complemented."""
    if not sbf_allowed(bits, sub, terminals):
        raise SbfMoveError(
            f"SBF move on sub-grid {sub.corner} is not allowed",
            {"corner": list(sub.corner), "inner": [int(bits[e]) for e in sub.inner_edges]},
        )
    flipped = np.array(bits, dtype=bool, copy=True)
    flipped[list(sub.inner_edges)] ^= True
    return flipped


def allowed_subgrids(
    bits: np.ndarray, subs: Sequence[SubGrid], terminals: Terminals = None
) -> List[int]:
    return [k for k, sub in enumerate(subs) if sbf_allowed(bits, sub, terminals)]


def terminals_of(scenario: GridScenario, robot: int) -> Tuple[Coordinate, Coordinate]:
    source, dest = scenario.endpoints[robot]
    return tuple(source), tuple(dest)


def l_path(graph: GridGraph, source: Coordinate, dest: Coordinate) -> np.ndarray:
    bits = np.zeros(graph.num_edges, dtype=bool)
    (r0, c0), (r1, c1) = source, dest
    step = 1 if c1 >= c0 else -1
    for c in range(c0, c1, step):
        bits[graph.edge_index((r0, c), (r0, c + step))] = True
    step = 1 if r1 >= r0 else -1
    for r in range(r0, r1, step):
        bits[graph.edge_index((r, c1), (r + step, c1))] = True
    return bits


def initial_path(scenario: GridScenario, robot: int) -> np.ndarray:
    """Horizontal to the destination column, then vertical to its row."""
    if not 0 <= robot < scenario.robots:
        raise ScenarioError(f"Robot index {robot} out of range")
    source, dest = terminals_of(scenario, robot)
    return l_path(graph_of(scenario), source, dest)


def is_trivial_path(
    graph: GridGraph, bits: np.ndarray, source: Coordinate, dest: Coordinate
) -> bool:
    """Valid and exactly as long as the Manhattan distance."""
    manhattan = abs(source[0] - dest[0]) + abs(source[1] - dest[1])
    return int(np.count_nonzero(bits)) == manhattan and is_valid_path(graph, bits, source, dest)


def _enclosed_cells(graph: GridGraph, difference: np.ndarray) -> Set[Coordinate]:
    """Cells bounded by an even-degree edge set, by crossing parity from the left border."""
    cells = set()
    for i in range(graph.rows - 1):
        inside = False
        for j in range(graph.cols - 1):
            if difference[graph.edge_index((i, j), (i + 1, j))]:
                inside = not inside
            if inside:
                cells.add((i, j))
    return cells


def _inner_count(bits: np.ndarray, sub: SubGrid) -> int:
    return sum(bool(bits[e]) for e in sub.inner_edges)


def _length_preserving_search(
    bits: np.ndarray,
    subs: Sequence[SubGrid],
    terminals: Tuple[Coordinate, Coordinate],
    graph: GridGraph,
) -> Optional[List[SubGrid]]:
    """Shortest run of length-preserving moves to a state that is trivial or admits S1."""
    start = bits.tobytes()
    parents: Dict[bytes, Tuple[Optional[bytes], Optional[int]]] = {start: (None, None)}
    queue: Deque[np.ndarray] = deque([bits])
    while queue:
        current = queue.popleft()
        for k, sub in enumerate(subs):
            if _inner_count(current, sub) != 2 or not sbf_allowed(current, sub, terminals):
                continue
            nxt = apply_sbf(current, sub, terminals)
            key = nxt.tobytes()
            if key in parents:
                continue
            parents[key] = (current.tobytes(), k)
            if len(parents) > settings.REACHABILITY_STATE_CAP:
                return None
            done = is_trivial_path(graph, nxt, *terminals) or any(
                _inner_count(nxt, s) == 3 and sbf_allowed(nxt, s, terminals) for s in subs
            )
            if done:
                moves = []
                while parents[key][0] is not None:
                    key, k = parents[key]
                    moves.append(subs[k])
                return moves[::-1]
            queue.append(nxt)
    return None


def reduce_to_trivial(
    scenario: GridScenario, bits: np.ndarray, source: Coordinate, dest: Coordinate
) -> List[SbfMove]:
    """Tagged SBF moves turning a valid path into a trivial one.

    S1 removes a one-cell detour (three active inner edges, length -2). S2
    swings a corner across a cell (two adjacent active inner edges) and is
    taken on cells enclosed between the path and the L-path. When neither is
    available a breadth-first search over S2 moves finds the next S1.
    """
    graph = graph_of(scenario)
    source, dest = tuple(source), tuple(dest)
    current = np.array(bits, dtype=bool, copy=True)
    if not is_valid_path(graph, current, source, dest):
        raise ScenarioError("Reduction needs a valid path", {"source": source, "dest": dest})

    terminals = (source, dest)
    subs = subgrids_of(scenario.rows, scenario.cols) if graph.rows > 1 and graph.cols > 1 else ()
    reference = l_path(graph, source, dest)
    cap = settings.REDUCTION_MOVE_FACTOR * graph.num_edges ** 2
    moves: List[SbfMove] = []

    def fail(reason: str) -> BudgetExceededError:
        return BudgetExceededError(
            f"Path reduction stopped: {reason}",
            {"moves": [[list(m.sub.corner), m.tag] for m in moves], "cap": cap},
        )

    while not is_trivial_path(graph, current, source, dest):
        if len(moves) >= cap:
            raise fail("move cap reached")

        chosen: List[SbfMove] = []
        for sub in subs:
            if _inner_count(current, sub) == 3 and sbf_allowed(current, sub, terminals):
                chosen = [SbfMove(sub=sub, tag="S1")]
                break
        if not chosen:
            enclosed = _enclosed_cells(graph, current ^ reference)
            for sub in subs:
                if (
                    sub.corner in enclosed
                    and _inner_count(current, sub) == 2
                    and sbf_allowed(current, sub, terminals)
                ):
                    chosen = [SbfMove(sub=sub, tag="S2")]
                    break
        if not chosen:
            path = _length_preserving_search(current, subs, terminals, graph)
            if path is None:
                raise fail("no length-preserving route to a shorter path")
            chosen = [SbfMove(sub=sub, tag="S2") for sub in path]

        for move in chosen:
            current = apply_sbf(current, move.sub, terminals)
            moves.append(move)

    log.debug("Reduced path", moves=len(moves), source=source, dest=dest)
    return moves


def reachable_states(
    scenario: GridScenario, robot: int, cap: Optional[int] = None
) -> Set[Tuple[int, ...]]:
    """Breadth-first closure of the initial path under allowed SBF moves."""
    cap = settings.REACHABILITY_STATE_CAP if cap is None else cap
    terminals = terminals_of(scenario, robot)
    start = initial_path(scenario, robot)
    subs = enumerate_subgrids(scenario) if scenario.rows > 1 and scenario.cols > 1 else []

    seen = {start.tobytes()}
    queue: Deque[np.ndarray] = deque([start])
    while queue:
        current = queue.popleft()
        for sub in subs:
            if not sbf_allowed(current, sub, terminals):
                continue
            nxt = apply_sbf(current, sub, terminals)
            key = nxt.tobytes()
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > cap:
                raise BudgetExceededError(
                    f"Reachable set of robot {robot} exceeds {cap} states",
                    {"robot": robot, "cap": cap},
                )
            queue.append(nxt)

    log.debug("Explored reachable states", robot=robot, states=len(seen))
    return {
        tuple(int(x) for x in np.frombuffer(key, dtype=bool)) for key in seen
    }

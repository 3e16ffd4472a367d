import hashlib
import json
from collections import Counter
from typing import Any, Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.services.grid import Coordinate, edge_count, grid_graph

DEFAULT_OBSTACLE_WEIGHT = 10.0
DEFAULT_NORMAL_WEIGHT = -1.0


# ------------------ Internal Domain Entities -------------------------

class GridScenario(BaseModel):
    """Grid, robots, endpoints, obstacles, edge weights/lengths and cost coefficients."""

    rows: int = Field(..., ge=1, description="Number of node rows (n)")
    cols: int = Field(..., ge=1, description="Number of node columns (m)")
    robots: int = Field(..., ge=1, description="Number of robots (r)")
    endpoints: Tuple[Tuple[Coordinate, Coordinate], ...]
    obstacles: FrozenSet[Coordinate] = frozenset()
    edge_weights: Tuple[float, ...]
    edge_lengths: Tuple[float, ...]
    alphas: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    model_config = ConfigDict(frozen=True)

    @property
    def num_edges(self) -> int:
        return edge_count(self.rows, self.cols)

    @property
    def num_subgrids(self) -> int:
        return max(self.rows - 1, 0) * max(self.cols - 1, 0)

    @property
    def num_variables(self) -> int:
        return self.robots * self.num_edges

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(a < 0 for a in v):
            raise ValueError("Cost coefficients must be nonnegative")
        return v

    @field_validator("edge_lengths")
    @classmethod
    def validate_lengths(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(d < 0 for d in v):
            raise ValueError("Edge lengths must be nonnegative")
        return v

    @model_validator(mode="after")
    def validate_layout(self) -> "GridScenario":
        graph = grid_graph(self.rows, self.cols)
        if len(self.endpoints) != self.robots:
            raise ValueError(
                f"Expected {self.robots} endpoint pairs, got {len(self.endpoints)}"
            )
        for node in self.obstacles:
            if not graph.contains(node):
                raise ValueError(f"Obstacle {node} lies outside the grid")
        for robot, (source, dest) in enumerate(self.endpoints):
            for node in (source, dest):
                if not graph.contains(node):
                    raise ValueError(f"Endpoint {node} of robot {robot} lies outside the grid")
                if node in self.obstacles:
                    raise ValueError(f"Endpoint {node} of robot {robot} is an obstacle")
        if len(self.edge_weights) != graph.num_edges:
            raise ValueError(
                f"Expected {graph.num_edges} edge weights, got {len(self.edge_weights)}"
            )
        if len(self.edge_lengths) != graph.num_edges:
            raise ValueError(
                f"Expected {graph.num_edges} edge lengths, got {len(self.edge_lengths)}"
            )
        for index, (a, b) in enumerate(graph.edges):
            weight = self.edge_weights[index]
            if a in self.obstacles or b in self.obstacles:
                if weight <= 0:
                    raise ValueError(f"Obstacle edge {a}-{b} needs a positive weight")
            elif weight >= 0:
                raise ValueError(f"Edge {a}-{b} needs a negative weight")
        return self

    def obstacle_edges(self) -> List[int]:
        graph = grid_graph(self.rows, self.cols)
        return [
            i for i, (a, b) in enumerate(graph.edges)
            if a in self.obstacles or b in self.obstacles
        ]

    @classmethod
    def build(
        cls,
        rows: int,
        cols: int,
        endpoints: List[Tuple[Coordinate, Coordinate]],
        obstacles: Optional[List[Coordinate]] = None,
        obstacle_weight: float = DEFAULT_OBSTACLE_WEIGHT,
        normal_weight: float = DEFAULT_NORMAL_WEIGHT,
        weight_overrides: Optional[Dict[int, float]] = None,
        edge_lengths: Optional[List[float]] = None,
        alphas: Tuple[float, float, float] = (1.0, 1.0, 1.0),
    ) -> "GridScenario":
        """Assemble a scenario from default weights plus per-edge overrides."""
        graph = grid_graph(rows, cols)
        blocked = {tuple(o) for o in (obstacles or [])}
        weights = [
            obstacle_weight if (a in blocked or b in blocked) else normal_weight
            for a, b in graph.edges
        ]
        for index, weight in (weight_overrides or {}).items():
            weights[index] = weight
        return cls(
            rows=rows,
            cols=cols,
            robots=len(endpoints),
            endpoints=tuple((tuple(s), tuple(d)) for s, d in endpoints),
            obstacles=frozenset(blocked),
            edge_weights=tuple(float(w) for w in weights),
            edge_lengths=tuple(float(d) for d in (edge_lengths or [1.0] * graph.num_edges)),
            alphas=tuple(float(a) for a in alphas),
        )


class PathState(BaseModel):
    """Joint decision-variable assignment: ``bits[r][e] = x_{r,e}``."""

    bits: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("bits", mode="before")
    @classmethod
    def validate_bits(cls, v: Any) -> np.ndarray:
        array = np.array(v, dtype=bool)
        if array.ndim != 2:
            raise ValueError("Path state must be a robots x edges matrix")
        array.flags.writeable = False
        return array

    @property
    def robots(self) -> int:
        return self.bits.shape[0]

    @property
    def num_edges(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def zeros(cls, scenario: GridScenario) -> "PathState":
        return cls(bits=np.zeros((scenario.robots, scenario.num_edges), dtype=bool))

    @classmethod
    def from_robot_bits(cls, rows: List[np.ndarray]) -> "PathState":
        return cls(bits=np.vstack([np.asarray(r, dtype=bool) for r in rows]))

    def robot_bits(self, robot: int) -> np.ndarray:
        return self.bits[robot]

    def with_robot_bits(self, robot: int, bits: np.ndarray) -> "PathState":
        updated = self.bits.copy()
        updated[robot] = bits
        return PathState(bits=updated)

    def key(self) -> bytes:
        rows, cols = self.bits.shape
        return f"{rows}x{cols}:".encode() + np.packbits(self.bits, axis=None).tobytes()

    def as_lists(self) -> List[List[int]]:
        return self.bits.astype(int).tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PathState):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.key())


class SubGrid(BaseModel):
    """One four-node cell a=(i,j), b=(i,j+1), c=(i+1,j+1), d=(i+1,j)."""

    corner: Coordinate
    nodes: Tuple[Coordinate, Coordinate, Coordinate, Coordinate]
    inner_edges: Tuple[int, int, int, int] = Field(..., description="ab, bc, cd, da")
    outside_edges: Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_cell(self) -> "SubGrid":
        i, j = self.corner
        if self.nodes != ((i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)):
            raise ValueError("Sub-grid nodes must follow the a->b->c->d unit square")
        if len(set(self.inner_edges)) != 4:
            raise ValueError("Inner edges must be pairwise distinct")
        for oe in self.outside_edges:
            if len(oe) > 2:
                raise ValueError("A sub-grid node has at most two outside edges")
            if set(oe) & set(self.inner_edges):
                raise ValueError("Outside edges must be disjoint from inner edges")
        return self


class SbfMove(BaseModel):
    """A tagged SBF move from the closed-region reduction."""

    sub: SubGrid
    tag: Literal["S1", "S2"]

    model_config = ConfigDict(frozen=True)


# ------------------ Scenario Document -------------------------

class EndpointSpec(BaseModel):
    source: Coordinate
    dest: Coordinate

    model_config = {"extra": "forbid"}


class EdgeWeightOverride(BaseModel):
    edge: Tuple[Coordinate, Coordinate] = Field(..., description="The two adjacent nodes")
    weight: float

    model_config = {"extra": "forbid"}


class WeightSpec(BaseModel):
    obstacle_edge: float = Field(DEFAULT_OBSTACLE_WEIGHT, gt=0)
    normal_edge: float = Field(DEFAULT_NORMAL_WEIGHT, lt=0)
    overrides: List[EdgeWeightOverride] = Field(default_factory=list)

    model_config = {"extra": "forbid"}


class ScenarioFile(BaseModel):
    """JSON scenario document (strict: unknown keys are rejected)."""

    description: Optional[str] = Field(None, description="Free-text label")
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    robots: int = Field(..., ge=1)
    endpoints: List[EndpointSpec]
    obstacles: List[Coordinate] = Field(default_factory=list)
    weights: WeightSpec = Field(default_factory=WeightSpec)
    lengths: Optional[List[float]] = Field(None, description="Per-edge lengths in canonical order")
    alphas: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "example": {
                "rows": 3,
                "cols": 3,
                "robots": 1,
                "endpoints": [{"source": [0, 0], "dest": [2, 2]}],
                "obstacles": [[1, 1]],
                "weights": {"obstacle_edge": 10, "normal_edge": -1, "overrides": []},
                "alphas": [1, 1, 1],
                "seed": 7,
            }
        },
    }

    def to_scenario(self) -> GridScenario:
        graph = grid_graph(self.rows, self.cols)
        overrides = {}
        for override in self.weights.overrides:
            a, b = override.edge
            if not (graph.contains(a) and graph.contains(b)):
                raise ValueError(f"Weight override edge {a}-{b} lies outside the grid")
            index = graph.edge_index(a, b)
            overrides[index] = override.weight
        return GridScenario.build(
            rows=self.rows,
            cols=self.cols,
            endpoints=[(e.source, e.dest) for e in self.endpoints],
            obstacles=list(self.obstacles),
            obstacle_weight=self.weights.obstacle_edge,
            normal_weight=self.weights.normal_edge,
            weight_overrides=overrides,
            edge_lengths=self.lengths,
            alphas=self.alphas,
        )

    @model_validator(mode="after")
    def validate_robot_count(self) -> "ScenarioFile":
        if len(self.endpoints) != self.robots:
            raise ValueError(f"Expected {self.robots} endpoint pairs, got {len(self.endpoints)}")
        return self

    @classmethod
    def from_scenario(
        cls, scenario: GridScenario, seed: int = 0, description: Optional[str] = None
    ) -> "ScenarioFile":
        """Re-serialize a scenario: base weights are the most common values, the rest overrides."""
        graph = grid_graph(scenario.rows, scenario.cols)
        blocked = set(scenario.obstacle_edges())
        obstacle_values = [scenario.edge_weights[i] for i in sorted(blocked)]
        normal_values = [
            w for i, w in enumerate(scenario.edge_weights) if i not in blocked
        ]
        obstacle_base = _most_common(obstacle_values, DEFAULT_OBSTACLE_WEIGHT)
        normal_base = _most_common(normal_values, DEFAULT_NORMAL_WEIGHT)
        overrides = []
        for index, weight in enumerate(scenario.edge_weights):
            base = obstacle_base if index in blocked else normal_base
            if weight != base:
                a, b = graph.edges[index]
                overrides.append(EdgeWeightOverride(edge=(a, b), weight=weight))
        lengths = None
        if any(d != 1.0 for d in scenario.edge_lengths):
            lengths = list(scenario.edge_lengths)
        return cls(
            description=description,
            rows=scenario.rows,
            cols=scenario.cols,
            robots=scenario.robots,
            endpoints=[EndpointSpec(source=s, dest=d) for s, d in scenario.endpoints],
            obstacles=sorted(scenario.obstacles),
            weights=WeightSpec(
                obstacle_edge=obstacle_base, normal_edge=normal_base, overrides=overrides
            ),
            lengths=lengths,
            alphas=scenario.alphas,
            seed=seed,
        )

    def to_document(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)

    def digest(self) -> str:
        """SHA-256 of the canonical scenario document (seed and label excluded)."""
        document = self.model_dump(mode="json", exclude={"seed", "description"})
        canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _most_common(values: List[float], default: float) -> float:
    if not values:
        return default
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


# ------------------ Run Record -------------------------

class RunRecord(BaseModel):
    """Everything needed to reproduce and audit one command run."""

    scenario_digest: str
    solver: str
    config: Dict[str, Any]
    result: Dict[str, Any]
    coverage: Dict[str, Any] = Field(default_factory=dict)
    duration_s: float = Field(..., ge=0)
    artifacts: List[str] = Field(default_factory=list)

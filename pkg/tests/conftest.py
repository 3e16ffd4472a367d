from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
import pytest

from app.cli.commands import load_scenario
from app.models.scenario_models import GridScenario, PathState
from app.services.grid import graph_of, path_bits

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


def make_scenario(
    rows: int,
    cols: int,
    endpoints: Sequence[Tuple[Tuple[int, int], Tuple[int, int]]],
    obstacles: Sequence[Tuple[int, int]] = (),
    alphas: Tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> GridScenario:
    return GridScenario.build(
        rows=rows,
        cols=cols,
        endpoints=list(endpoints),
        obstacles=list(obstacles),
        alphas=alphas,
    )


def bits_of(scenario: GridScenario, nodes: List[Tuple[int, int]]) -> np.ndarray:
    """Edge bit-vector of the walk through ``nodes``."""
    return path_bits(graph_of(scenario), nodes)


def state_of(scenario: GridScenario, *walks: List[Tuple[int, int]]) -> PathState:
    return PathState.from_robot_bits([bits_of(scenario, walk) for walk in walks])


@pytest.fixture
def grid_2x2() -> GridScenario:
    """One robot, corner to corner, default weights."""
    return make_scenario(2, 2, [((0, 0), (1, 1))])


@pytest.fixture
def grid_3x3() -> GridScenario:
    """One robot, corner to corner, no obstacles."""
    return make_scenario(3, 3, [((0, 0), (2, 2))])


@pytest.fixture
def obstacles_3x3() -> GridScenario:
    scenario, _ = load_scenario(str(SCENARIO_DIR / "obstacles_3x3.json"))
    return scenario


@pytest.fixture
def two_robots_4x4() -> GridScenario:
    scenario, _ = load_scenario(str(SCENARIO_DIR / "two_robots_4x4.json"))
    return scenario


@pytest.fixture
def two_robots_5x5() -> GridScenario:
    scenario, _ = load_scenario(str(SCENARIO_DIR / "two_robots_5x5.json"))
    return scenario


@pytest.fixture
def scenario_path():
    """Path of a shipped scenario file by name."""

    def _path(name: str) -> str:
        return str(SCENARIO_DIR / name)

    return _path


@pytest.fixture
def out_dir(tmp_path, monkeypatch) -> Path:
    """Isolated artifact directory; logs also land under tmp_path."""
    monkeypatch.chdir(tmp_path)
    return tmp_path / "out"

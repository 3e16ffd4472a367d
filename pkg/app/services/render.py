"""ASCII and SVG renderings of joint path states and convergence curves.

SVG output is byte-stable: matplotlib's hash salt is pinned and the date
metadata dropped.
"""

import io
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.models.scenario_models import GridScenario, PathState  # noqa: E402
from app.services.grid import graph_of  # noqa: E402
from app.utils.exceptions import ScenarioError  # noqa: E402

SVG_HASH_SALT = "sbf-planner"
ROBOT_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")


def _node_glyph(node, source, dest, obstacles) -> str:
    if node == source:
        return "S"
    if node == dest:
        return "D"
    if node in obstacles:
        return "X"
    return "o"


def render_ascii(state: PathState, scenario: GridScenario) -> str:
    """One text grid per robot: S/D endpoints, X obstacles, o nodes, - and | active edges."""
    _check(state, scenario)
    graph = graph_of(scenario)
    blocks = []
    for robot in range(scenario.robots):
        source, dest = (tuple(p) for p in scenario.endpoints[robot])
        bits = state.bits[robot]
        lines = [f"robot {robot}"]
        for r in range(scenario.rows):
            row = ""
            for c in range(scenario.cols):
                row += _node_glyph((r, c), source, dest, scenario.obstacles)
                if c < scenario.cols - 1:
                    row += "-" if bits[graph.edge_index((r, c), (r, c + 1))] else " "
            lines.append(row.rstrip())
            if r < scenario.rows - 1:
                below = ""
                for c in range(scenario.cols):
                    below += "|" if bits[graph.edge_index((r, c), (r + 1, c))] else " "
                    if c < scenario.cols - 1:
                        below += " "
                lines.append(below.rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _svg(fig) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def render_svg(state: PathState, scenario: GridScenario) -> str:
    """Squares for endpoints, triangles for obstacles, one stroke color per robot."""
    _check(state, scenario)
    graph = graph_of(scenario)
    fig, ax = plt.subplots(figsize=(1 + scenario.cols, 1 + scenario.rows))

    xs = [c for r in range(scenario.rows) for c in range(scenario.cols)]
    ys = [r for r in range(scenario.rows) for c in range(scenario.cols)]
    ax.scatter(xs, ys, s=20, c="lightgray", zorder=1)

    offset_step = 0.08
    for robot in range(scenario.robots):
        color = ROBOT_COLORS[robot % len(ROBOT_COLORS)]
        shift = (robot - (scenario.robots - 1) / 2) * offset_step
        for e in [int(e) for e in state.bits[robot].nonzero()[0]]:
            (r0, c0), (r1, c1) = graph.edges[e]
            line, = ax.plot(
                [c0 + shift, c1 + shift], [r0 + shift, r1 + shift],
                color=color, linewidth=2.5, zorder=2,
            )
            line.set_gid(f"robot-{robot}-edge-{e}")
        source, dest = scenario.endpoints[robot]
        ax.scatter(
            [source[1], dest[1]], [source[0], dest[0]],
            marker="s", s=120, c=color, edgecolors="black", zorder=3, label=f"robot {robot}",
        )

    if scenario.obstacles:
        obstacles = sorted(scenario.obstacles)
        ax.scatter(
            [o[1] for o in obstacles], [o[0] for o in obstacles],
            marker="^", s=140, c="black", zorder=3, label="obstacle",
        )

    ax.set_xlim(-0.5, scenario.cols - 0.5)
    ax.set_ylim(scenario.rows - 0.5, -0.5)
    ax.set_aspect("equal")
    ax.set_xticks(range(scenario.cols))
    ax.set_yticks(range(scenario.rows))
    ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), fontsize="small")
    fig.tight_layout()
    return _svg(fig)


def render_path(state: PathState, scenario: GridScenario, fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(state, scenario)
    if fmt == "svg":
        return render_svg(state, scenario)
    raise ValueError(f"Unknown render format '{fmt}'")


def plot_convergence(
    series: Dict[str, Sequence[Tuple[int, float]]], ylabel: str = "cost"
) -> str:
    """Line plot of one or more ``(iteration, value)`` curves as SVG."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, points in series.items():
        iterations: List[int] = [p[0] for p in points]
        values: List[float] = [p[1] for p in points]
        ax.plot(iterations, values, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    return _svg(fig)


def _check(state: PathState, scenario: GridScenario) -> None:
    if state.bits.shape != (scenario.robots, scenario.num_edges):
        raise ScenarioError(
            f"State shape {state.bits.shape} does not match the scenario",
            {"expected": [scenario.robots, scenario.num_edges]},
        )

import argparse
import sys
from typing import List, Optional

from app.cli.commands import cmd_explore, cmd_resources, cmd_solve, cmd_sweep
from app.events.lifecycle import lifespan
from app.utils.config import settings
from app.utils.exceptions import PlannerError, ScenarioError, handle_cli_error


class PlannerArgumentParser(argparse.ArgumentParser):
    """Usage errors surface as scenario parse errors (exit 1)."""

    def error(self, message: str) -> None:
        raise ScenarioError(f"Invalid arguments: {message}", {"usage": self.format_usage().strip()})


def build_parser() -> argparse.ArgumentParser:
    parser = PlannerArgumentParser(
        prog="sbf-planner",
        description=f"{settings.APP_NAME}: multi-robot coverage paths with SBF moves",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="Run a solver on a scenario")
    solve.add_argument("--scenario", required=True, help="Scenario JSON file")
    solve.add_argument("--solver", required=True, choices=["dfs", "sa", "ga", "qaoa"])
    solve.add_argument("--seed", type=int, default=None, help="Overrides the scenario seed")
    solve.add_argument("--layers", type=int, default=1, help="QAOA depth p")
    solve.add_argument("--out", default=None, help="Artifact directory")
    solve.add_argument("--restarts", type=int, default=None, help="SA seeds run concurrently / QAOA restarts")
    solve.add_argument("--log-raw", action="store_true", help="Log per-step cost instead of best-so-far")
    solve.add_argument("--format", choices=["ascii", "svg", "both"], default="both")
    solve.add_argument("--population", type=int, default=None, help="GA population size")
    solve.add_argument("--generations", type=int, default=None, help="GA generations")
    solve.add_argument("--iterations", type=int, default=None, help="QAOA optimizer iterations")
    solve.add_argument("--shots", type=int, default=None, help="QAOA measurement shots")
    solve.set_defaults(handler=cmd_solve)

    resources = commands.add_parser("resources", help="Estimate qubits and gate counts")
    resources.add_argument("--scenario", required=True)
    resources.add_argument("--layers", type=int, default=1)
    resources.add_argument("--out", default=None)
    resources.set_defaults(handler=cmd_resources)

    explore = commands.add_parser("explore", help="Check SBF reachability against path enumeration")
    explore.add_argument("--scenario", required=True)
    explore.add_argument("--robot", type=int, default=0)
    explore.set_defaults(handler=cmd_explore)

    sweep = commands.add_parser("sweep", help="QAOA loss curves over several depths")
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--layers", type=int, nargs="+", required=True)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--iterations", type=int, default=None)
    sweep.add_argument("--out", default=None)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except PlannerError as exc:
        return handle_cli_error(exc, "parse")

    with lifespan(args.command):
        try:
            return args.handler(args)
        except Exception as exc:
            return handle_cli_error(exc, args.command)


if __name__ == "__main__":
    sys.exit(main())

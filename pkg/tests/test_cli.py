import json
from unittest.mock import patch

import pytest
import structlog

from app.events.lifecycle import lifespan
from app.main import build_parser, main
from app.services import qaoa as qaoa_service
from app.services.storage import ArtifactStorage
from app.utils.config import settings
from app.utils.exceptions import (
    EXIT_BUDGET_EXCEEDED,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    ArtifactStorageError,
    InfeasibleScenarioError,
    handle_cli_error,
)


@pytest.fixture
def write_scenario(tmp_path):
    def _write(name: str, content: str) -> str:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return str(path)

    return _write


class TestParser:
    def test_solve_defaults(self):
        args = build_parser().parse_args(["solve", "--scenario", "s.json", "--solver", "sa"])
        assert (args.layers, args.restarts, args.format, args.log_raw) == (1, None, "both", False)

    def test_unknown_solver_is_parse_error(self, out_dir, scenario_path, capsys):
        code = main(["solve", "--scenario", scenario_path("grid_2x2.json"), "--solver", "bfs"])
        assert code == EXIT_PARSE_ERROR
        assert "scenario_error" in capsys.readouterr().err

    def test_missing_command(self, out_dir):
        assert main([]) == EXIT_PARSE_ERROR


class TestSolve:
    def test_dfs_artifacts(self, out_dir, scenario_path, capsys):
        code = main(["solve", "--scenario", scenario_path("grid_2x2.json"), "--solver", "dfs", "--out", str(out_dir)])
        assert code == EXIT_OK
        assert (out_dir / "path.txt").exists()
        assert (out_dir / "path.svg").exists()
        assert not (out_dir / "convergence.csv").exists()

        record = json.loads((out_dir / "run.json").read_text())
        assert record["solver"] == "dfs"
        assert record["result"]["best_cost"]["total"] == pytest.approx(2.0)
        assert record["config"]["seed"] == 0
        assert "robot 0" in capsys.readouterr().out

    def test_sa_convergence_is_reproducible(self, out_dir, scenario_path):
        for name in ("a", "b"):
            args = ["solve", "--scenario", scenario_path("obstacles_3x3.json"), "--solver", "sa"]
            assert main(args + ["--out", str(out_dir / name), "--format", "ascii"]) == EXIT_OK
        first = (out_dir / "a" / "convergence.csv").read_bytes()
        assert first == (out_dir / "b" / "convergence.csv").read_bytes()
        assert first.startswith(b"iteration,cost\n")
        assert not (out_dir / "a" / "path.svg").exists()

    def test_ga_best_so_far_series(self, out_dir, scenario_path):
        args = ["solve", "--scenario", scenario_path("obstacles_3x3.json"), "--solver", "ga",
                "--generations", "5", "--out", str(out_dir)]
        assert main(args) == EXIT_OK
        lines = (out_dir / "convergence.csv").read_text().splitlines()[1:]
        values = [float(line.split(",")[1]) for line in lines]
        assert len(values) == 6
        assert values == sorted(values, reverse=True)

    def test_qaoa_writes_samples(self, out_dir, scenario_path):
        args = ["solve", "--scenario", scenario_path("grid_2x2.json"), "--solver", "qaoa",
                "--iterations", "3", "--shots", "64", "--out", str(out_dir)]
        assert main(args) == EXIT_OK
        samples = json.loads((out_dir / "samples.json").read_text())
        assert samples["shots"] == 64
        record = json.loads((out_dir / "run.json").read_text())
        assert record["result"]["feasible_probability"] == pytest.approx(1.0)

    @pytest.mark.parametrize("flag, expected", [(["--restarts", "1"], 1), (["--restarts", "2"], 2), ([], None)])
    def test_qaoa_restarts_reach_optimizer(self, out_dir, scenario_path, flag, expected):
        args = ["solve", "--scenario", scenario_path("grid_2x2.json"), "--solver", "qaoa",
                "--iterations", "2", "--shots", "16", "--out", str(out_dir)] + flag
        with patch("app.services.qaoa.optimize", wraps=qaoa_service.optimize) as optimize:
            assert main(args) == EXIT_OK
        restarts = optimize.call_args.kwargs["config"].restarts
        assert restarts == (settings.QAOA_RESTARTS if expected is None else expected)
        record = json.loads((out_dir / "run.json").read_text())
        assert record["config"]["restarts"] == expected

    def test_sa_without_restarts_runs_one_seed(self, out_dir, scenario_path):
        args = ["solve", "--scenario", scenario_path("obstacles_3x3.json"), "--solver", "sa", "--out", str(out_dir)]
        with patch("app.cli.commands.sa_solve_restarts") as restarts:
            assert main(args) == EXIT_OK
        restarts.assert_not_called()

    def test_qaoa_qubit_guard(self, out_dir, scenario_path, capsys):
        args = ["solve", "--scenario", scenario_path("two_robots_4x4.json"), "--solver", "qaoa",
                "--out", str(out_dir)]
        assert main(args) == EXIT_BUDGET_EXCEEDED
        assert "budget_exceeded" in capsys.readouterr().err

    def test_dfs_budget(self, out_dir, scenario_path):
        with patch.object(settings, "DFS_COMBINATION_BUDGET", 1):
            code = main(["solve", "--scenario", scenario_path("obstacles_3x3.json"), "--solver", "dfs",
                         "--out", str(out_dir)])
        assert code == EXIT_BUDGET_EXCEEDED


class TestScenarioErrors:
    def test_invalid_json_reports_position(self, out_dir, write_scenario, capsys):
        path = write_scenario("broken.json", '{"rows": 3,\n  "cols": }')
        assert main(["explore", "--scenario", path]) == EXIT_PARSE_ERROR
        assert "line 2" in capsys.readouterr().err

    def test_unknown_key(self, out_dir, write_scenario, capsys):
        document = {
            "rows": 2, "cols": 2, "robots": 1,
            "endpoints": [{"source": [0, 0], "dest": [1, 1]}],
            "colour": "red",
        }
        path = write_scenario("extra.json", json.dumps(document))
        assert main(["explore", "--scenario", path]) == EXIT_PARSE_ERROR
        assert "colour" in capsys.readouterr().err

    def test_missing_file(self, out_dir, tmp_path):
        assert main(["resources", "--scenario", str(tmp_path / "nope.json")]) == EXIT_PARSE_ERROR

    def test_robot_out_of_range(self, out_dir, scenario_path):
        assert main(["explore", "--scenario", scenario_path("grid_2x2.json"), "--robot", "3"]) == EXIT_PARSE_ERROR


class TestOtherCommands:
    def test_resources(self, out_dir, scenario_path, capsys):
        code = main(["resources", "--scenario", scenario_path("obstacles_3x3.json"), "--out", str(out_dir)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "N_C total" in out and "2300" in out
        report = json.loads((out_dir / "resources.json").read_text())
        assert report["totals"] == {"N_C": 2300, "N_S": 3298}

    def test_explore_pass(self, out_dir, scenario_path, capsys):
        assert main(["explore", "--scenario", scenario_path("obstacles_3x3.json")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "reachable states: 12" in out
        assert "enumerated paths: 12" in out
        assert out.strip().endswith("PASS")

    def test_sweep(self, out_dir, scenario_path):
        args = ["sweep", "--scenario", scenario_path("grid_2x2.json"), "--layers", "1", "2",
                "--iterations", "2", "--out", str(out_dir)]
        assert main(args) == EXIT_OK
        lines = (out_dir / "sweep.csv").read_text().splitlines()
        assert lines[0] == "layers,iteration,expectation"
        assert len(lines) == 5
        assert (out_dir / "sweep.svg").exists()


class TestErrorHandling:
    def test_infeasible_exit_code(self, capsys):
        assert handle_cli_error(InfeasibleScenarioError("no path"), "solve") == EXIT_INFEASIBLE
        assert '"error": "infeasible_scenario"' in capsys.readouterr().err

    def test_unexpected_error_is_internal(self, capsys):
        try:
            raise RuntimeError("boom")
        except RuntimeError as exc:
            assert handle_cli_error(exc, "solve") == EXIT_PARSE_ERROR
        assert "internal_error" in capsys.readouterr().err


class TestLifespan:
    def test_binds_and_clears_run_context(self, out_dir):
        with patch("app.events.lifecycle.shutdown_tasks") as shutdown:
            with lifespan("solve") as run_id:
                assert structlog.contextvars.get_contextvars() == {"command": "solve", "run_id": run_id}
        assert len(run_id) == 12
        (duration,), _ = shutdown.call_args
        assert duration >= 0.0
        assert structlog.contextvars.get_contextvars() == {}


class TestArtifactStorage:
    def test_empty_artifact_rejected(self, tmp_path):
        with pytest.raises(ArtifactStorageError):
            ArtifactStorage(str(tmp_path)).write_text("empty.txt", "")

    def test_csv_floats_round_trip(self, tmp_path):
        storage = ArtifactStorage(str(tmp_path))
        path = storage.write_csv("values.csv", ("i", "v"), [(1, 0.1), (2, 1 / 3)])
        assert path.read_text() == "i,v\n1,0.1\n2,0.3333333333333333\n"
        assert storage.paths == [str(path)]

    def test_json_is_sorted(self, tmp_path):
        path = ArtifactStorage(str(tmp_path)).write_json("doc.json", {"b": 1, "a": 2})
        assert path.read_text() == '{\n  "a": 2,\n  "b": 1\n}\n'

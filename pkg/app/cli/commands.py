import argparse
import json
import time
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from app.models.quantum_models import OptimizerConfig, ResourceReport
from app.models.scenario_models import GridScenario, RunRecord, ScenarioFile
from app.models.solver_models import SolverResult
from app.services import qaoa
from app.services.cost import cost_total, coverage_summary
from app.services.grid import enumerate_paths
from app.services.render import plot_convergence, render_ascii, render_svg
from app.services.resources import full_report
from app.services.sbf import reachable_states
from app.services.solvers import dfs_solve, ga_solve, sa_solve, sa_solve_restarts
from app.services.storage import ArtifactStorage
from app.utils.config import settings
from app.utils.exceptions import EXIT_OK, ScenarioError, scenario_error_from_validation
from app.utils.logger import logger


def load_scenario(path: str) -> Tuple[GridScenario, ScenarioFile]:
    """Parse and validate a scenario document."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = handle.read()
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e.strerror or e}", {"path": path})

    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ScenarioError(
            f"Invalid JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}",
            {"path": path, "line": e.lineno, "column": e.colno},
        )

    try:
        document = ScenarioFile.model_validate(data)
        scenario = document.to_scenario()
    except ValidationError as e:
        raise scenario_error_from_validation(e, path)
    except ValueError as e:
        raise ScenarioError(f"Invalid scenario {path}: {e}", {"path": path})

    logger.debug(
        "Scenario loaded",
        path=path,
        rows=scenario.rows,
        cols=scenario.cols,
        robots=scenario.robots,
        obstacles=len(scenario.obstacles),
    )
    return scenario, document


def _series(history: Sequence[Tuple[int, float]], raw: bool) -> List[Tuple[int, float]]:
    if raw:
        return [(int(i), float(v)) for i, v in history]
    best = float("inf")
    series = []
    for i, v in history:
        best = min(best, float(v))
        series.append((int(i), best))
    return series


def _config(args: argparse.Namespace, **overrides: Any) -> Dict[str, Any]:
    config = {k: v for k, v in vars(args).items() if k != "handler"}
    config.update(overrides)
    return config


def _solve_qaoa(scenario: GridScenario, args: argparse.Namespace, seed: int) -> Tuple[SolverResult, Dict[str, Any]]:
    overrides = {}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    config = OptimizerConfig(**overrides)
    params, history = qaoa.optimize(scenario, args.layers, config=config, seed=seed)
    state, value = qaoa.run_qaoa(scenario, params)
    histogram, probabilities = qaoa.sample(state, args.shots, seed)
    best_index = int(np.argmax(probabilities))
    best_state = qaoa.decode_index(best_index, scenario)
    top = sorted(histogram.items(), key=lambda item: (-item[1], item[0]))[:10]
    result = SolverResult(
        solver="qaoa",
        best_state=best_state,
        best_cost=cost_total(best_state, scenario),
        history=[(i + 1, v) for i, v in enumerate(history)],
        evaluations=len(history),
        seed=seed,
        extras={
            "layers": params.layers,
            "betas": list(params.betas),
            "gammas": list(params.gammas),
            "expectation": value,
            "argmax_index": best_index,
            "argmax_probability": float(probabilities[best_index]),
            "feasible_probability": qaoa.feasible_probability(state, scenario),
        },
    )
    samples = {
        "shots": sum(histogram.values()),
        "top": [
            {"index": index, "count": count, "bits": qaoa.decode_index(index, scenario).as_lists()}
            for index, count in top
        ],
    }
    return result, samples


def cmd_solve(args: argparse.Namespace) -> int:
    """Run one solver and write rendering, convergence and run-record artifacts."""
    scenario, document = load_scenario(args.scenario)
    seed = document.seed if args.seed is None else args.seed
    storage = ArtifactStorage(args.out or settings.OUTPUT_DIR)
    logger.info("Solving scenario", solver=args.solver, seed=seed, variables=scenario.num_variables)

    started = time.perf_counter()
    samples = None
    if args.solver == "dfs":
        result = dfs_solve(scenario)
    elif args.solver == "sa":
        restarts = args.restarts or 1
        if restarts > 1:
            result = sa_solve_restarts(scenario, None, seed, restarts)
        else:
            result = sa_solve(scenario, seed=seed)
    elif args.solver == "ga":
        result = ga_solve(scenario, args.population, args.generations, seed)
    else:
        result, samples = _solve_qaoa(scenario, args, seed)
    duration = time.perf_counter() - started

    if args.format in ("ascii", "both"):
        storage.write_text("path.txt", render_ascii(result.best_state, scenario))
    if args.format in ("svg", "both"):
        storage.write_text("path.svg", render_svg(result.best_state, scenario))
    if args.solver != "dfs":
        series = _series(result.history, args.log_raw)
        storage.write_csv("convergence.csv", ("iteration", "cost"), series)
        ylabel = "expectation" if args.solver == "qaoa" else "cost"
        storage.write_text("convergence.svg", plot_convergence({args.solver: series}, ylabel))
    if samples is not None:
        storage.write_json("samples.json", samples)

    coverage = coverage_summary(result.best_state, scenario)
    record = RunRecord(
        scenario_digest=document.digest(),
        solver=args.solver,
        config=_config(args, seed=seed),
        result=result.summary(),
        coverage=coverage,
        duration_s=duration,
        artifacts=storage.paths + [str(storage.root / "run.json")],
    )
    storage.write_json("run.json", record.model_dump(mode="json"))

    logger.info("Solve finished", solver=args.solver, best_total=result.best_cost.total)
    print(render_ascii(result.best_state, scenario), end="")
    print(
        json.dumps(
            {
                "solver": args.solver,
                "best_cost": result.best_cost.model_dump(),
                "coverage": coverage,
                "artifacts": record.artifacts,
            },
            indent=2,
        )
    )
    return EXIT_OK


def format_report_table(report: ResourceReport) -> str:
    rows = [
        ("grid", f"{report.rows}x{report.cols}"),
        ("robots", report.robots),
        ("layers", report.layers),
        ("decision qubits", report.qubits_decision),
        ("ancilla qubits", report.qubits_ancilla),
        ("Toffoli work qubits", report.toffoli_work_qubits),
        ("partial mixers", report.partial_mixer_count),
        ("phase RZ (linear)", report.phase_rz),
        ("phase CNOT (quadratic)", report.phase_cnot),
        ("phase single (quadratic)", report.phase_single),
        ("partial mixer CNOT", report.partial_mixer_cnot),
        ("partial mixer single", report.partial_mixer_single),
        ("mixer CNOT", report.mixer_cnot),
        ("mixer single", report.mixer_single),
        ("N_C per layer", report.layer_totals["N_C"]),
        ("N_S per layer", report.layer_totals["N_S"]),
        ("N_C total", report.totals["N_C"]),
        ("N_S total", report.totals["N_S"]),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows) + "\n"


def cmd_resources(args: argparse.Namespace) -> int:
    scenario, _ = load_scenario(args.scenario)
    report = full_report(scenario, args.layers)
    storage = ArtifactStorage(args.out or settings.OUTPUT_DIR)
    path = storage.write_json("resources.json", report.model_dump(mode="json"))
    logger.info("Resource report written", path=str(path), totals=report.totals)
    print(format_report_table(report), end="")
    print(f"report: {path}")
    return EXIT_OK


def cmd_explore(args: argparse.Namespace) -> int:
    """Compare the SBF closure of the L-path with the enumerated valid paths."""
    scenario, _ = load_scenario(args.scenario)
    if not 0 <= args.robot < scenario.robots:
        raise ScenarioError(
            f"Robot index {args.robot} out of range for {scenario.robots} robots",
            {"robot": args.robot},
        )
    reachable = reachable_states(scenario, args.robot)
    oracle = {
        tuple(int(x) for x in bits)
        for bits in enumerate_paths(scenario, args.robot, limit=settings.REACHABILITY_STATE_CAP)
    }
    verdict = "PASS" if reachable == oracle else "FAIL"
    logger.info("Exploration finished", reachable=len(reachable), enumerated=len(oracle), verdict=verdict)
    print(f"reachable states: {len(reachable)}")
    print(f"enumerated paths: {len(oracle)}")
    print(verdict)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Optimize QAOA at several depths and write one loss curve per depth."""
    scenario, document = load_scenario(args.scenario)
    seed = document.seed if args.seed is None else args.seed
    storage = ArtifactStorage(args.out or settings.OUTPUT_DIR)
    overrides = {} if args.iterations is None else {"iterations": args.iterations}
    config = OptimizerConfig(**overrides)

    curves: Dict[str, List[Tuple[int, float]]] = {}
    rows = []
    best: Dict[int, float] = {}
    for layers in args.layers:
        _, history = qaoa.optimize(scenario, layers, config=config, seed=seed)
        curve = [(i + 1, v) for i, v in enumerate(history)]
        curves[f"p={layers}"] = curve
        rows.extend((layers, i, v) for i, v in curve)
        best[layers] = min(history)
        logger.info("Sweep depth finished", layers=layers, best_expectation=best[layers])

    storage.write_csv("sweep.csv", ("layers", "iteration", "expectation"), rows)
    storage.write_text("sweep.svg", plot_convergence(curves, "expectation"))
    print(json.dumps({"best_expectation": best, "artifacts": storage.paths}, indent=2))
    return EXIT_OK

"""Classical solvers over SBF neighbourhoods: DFS oracle, simulated annealing, GA."""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import structlog

from app.models.scenario_models import GridScenario, PathState
from app.models.solver_models import AnnealSchedule, SolverResult
from app.services.cost import CostTracker, batch_cost_total, cost_total
from app.services.grid import enumerate_paths, graph_of, is_valid_path
from app.services.sbf import apply_sbf, enumerate_subgrids, initial_path, sbf_allowed, terminals_of
from app.utils.config import settings
from app.utils.exceptions import BudgetExceededError, InfeasibleScenarioError

log = structlog.get_logger(__name__)

IMPROVEMENT_TOLERANCE = 1e-9


def initial_state(scenario: GridScenario) -> PathState:
    return PathState.from_robot_bits(
        [initial_path(scenario, r) for r in range(scenario.robots)]
    )


def _subgrids(scenario: GridScenario):
    if scenario.rows < 2 or scenario.cols < 2:
        return []
    return enumerate_subgrids(scenario)


def _assert_feasible(scenario: GridScenario, bits: np.ndarray) -> None:
    graph = graph_of(scenario)
    for robot, (source, dest) in enumerate(scenario.endpoints):
        if not is_valid_path(graph, bits[robot], source, dest):
            raise InfeasibleScenarioError(
                f"Robot {robot} left the valid-path set", {"robot": robot}
            )


# ------------------ Exhaustive search -------------------------

def dfs_solve(scenario: GridScenario) -> SolverResult:
    """Global minimum over every joint combination of valid per-robot paths.

    Ties go to the lexicographically smallest joint bit matrix.
    """
    per_robot = [
        np.array(enumerate_paths(scenario, r), dtype=bool) for r in range(scenario.robots)
    ]
    counts = [len(p) for p in per_robot]
    combinations = math.prod(counts)
    if combinations > settings.DFS_COMBINATION_BUDGET:
        raise BudgetExceededError(
            f"{combinations} joint path combinations exceed the budget of "
            f"{settings.DFS_COMBINATION_BUDGET}",
            {"path_counts": counts, "budget": settings.DFS_COMBINATION_BUDGET},
        )
    log.info("DFS enumeration", path_counts=counts, combinations=combinations)

    last = per_robot[-1]
    best_total = math.inf
    best_bits: Optional[np.ndarray] = None
    history = []
    evaluations = 0

    for prefix in itertools.product(*(range(c) for c in counts[:-1])):
        batch = np.empty((len(last), scenario.robots, scenario.num_edges), dtype=bool)
        for robot, index in enumerate(prefix):
            batch[:, robot, :] = per_robot[robot][index]
        batch[:, -1, :] = last
        totals = batch_cost_total(batch, scenario)
        k = int(np.argmin(totals))
        evaluations += len(last)
        if totals[k] < best_total - IMPROVEMENT_TOLERANCE:
            best_total = float(totals[k])
            best_bits = batch[k].copy()
            history.append((evaluations, best_total))

    best_state = PathState(bits=best_bits)
    best_cost = cost_total(best_state, scenario)
    log.info("DFS finished", best_total=best_cost.total, evaluations=evaluations)
    return SolverResult(
        solver="dfs",
        best_state=best_state,
        best_cost=best_cost,
        history=history,
        evaluations=evaluations,
        extras={"path_counts": counts},
    )


# ------------------ Simulated annealing -------------------------

def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept downhill and flat moves; uphill with probability ``exp(-delta/T)``."""
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


def sa_solve(
    scenario: GridScenario, schedule: Optional[AnnealSchedule] = None, seed: int = 0
) -> SolverResult:
    """Anneal from the heuristic L-paths using random allowed SBF moves."""
    schedule = schedule or AnnealSchedule.default_for(scenario)
    rng = np.random.default_rng(seed)
    subs = _subgrids(scenario)
    terminals = [terminals_of(scenario, r) for r in range(scenario.robots)]
    tracker = CostTracker(scenario, initial_state(scenario))

    best_state = tracker.state()
    best_total = tracker.total
    history = [(0, tracker.total)]
    pairs = scenario.robots * len(subs)
    max_tries = settings.SA_NEIGHBOR_TRIES_FACTOR * pairs
    step = 0
    accepted = 0
    frozen = pairs == 0

    for temperature in schedule.temperatures():
        if frozen:
            break
        for _ in range(schedule.steps_per_temperature):
            move = None
            for _ in range(max_tries):
                robot = int(rng.integers(scenario.robots))
                sub = subs[int(rng.integers(len(subs)))]
                if sbf_allowed(tracker.bits[robot], sub, terminals[robot]):
                    move = (robot, sub)
                    break
            if move is None:
                log.debug("Annealing frozen", step=step, temperature=temperature)
                frozen = True
                break

            robot, sub = move
            step += 1
            delta = tracker.flip_delta(robot, sub.inner_edges)
            if metropolis_accept(delta, temperature, rng):
                tracker.flip(robot, sub.inner_edges)
                accepted += 1
                if settings.DEBUG:
                    _assert_feasible(scenario, tracker.bits)
                if tracker.total < best_total - IMPROVEMENT_TOLERANCE:
                    best_total = tracker.total
                    best_state = tracker.state()
            history.append((step, tracker.total))

    best_cost = cost_total(best_state, scenario)
    log.info("Annealing finished", seed=seed, steps=step, accepted=accepted, best_total=best_cost.total)
    return SolverResult(
        solver="sa",
        best_state=best_state,
        best_cost=best_cost,
        history=history,
        evaluations=step,
        seed=seed,
        extras={"accepted": accepted, "frozen": frozen, "temperatures": len(schedule.temperatures())},
    )


def sa_solve_restarts(
    scenario: GridScenario,
    schedule: Optional[AnnealSchedule],
    seed: int,
    restarts: int,
    max_workers: Optional[int] = None,
) -> SolverResult:
    """Independent annealing runs with seeds ``seed..seed+restarts-1``; best wins, lowest index on ties."""
    seeds = [seed + k for k in range(max(restarts, 1))]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda s: sa_solve(scenario, schedule, s), seeds))
    best_index = 0
    for index, result in enumerate(results):
        if result.best_cost.total < results[best_index].best_cost.total - IMPROVEMENT_TOLERANCE:
            best_index = index
    best = results[best_index]
    extras = dict(best.extras)
    extras["restarts"] = [
        {"seed": r.seed, "best_total": r.best_cost.total} for r in results
    ]
    return best.model_copy(update={"extras": extras})


# ------------------ Genetic algorithm -------------------------

def _offspring(
    bits: np.ndarray, subs: Sequence, terminals: List, robots: int
) -> List[np.ndarray]:
    children = []
    for robot in range(robots):
        for sub in subs:
            if sbf_allowed(bits[robot], sub, terminals[robot]):
                child = bits.copy()
                child[robot] = apply_sbf(bits[robot], sub, terminals[robot])
                children.append(child)
    return children


def ga_solve(
    scenario: GridScenario,
    population_size: Optional[int] = None,
    generations: Optional[int] = None,
    seed: int = 0,
) -> SolverResult:
    """Mutation-only GA: every allowed SBF move spawns an offspring, truncation selection."""
    population_size = settings.GA_POPULATION_SIZE if population_size is None else population_size
    generations = settings.GA_GENERATIONS if generations is None else generations
    if population_size < 1:
        raise ValueError("population_size must be at least 1")
    rng = np.random.default_rng(seed)
    subs = _subgrids(scenario)
    terminals = [terminals_of(scenario, r) for r in range(scenario.robots)]

    population = [initial_state(scenario).bits.copy()]
    totals = batch_cost_total(np.stack(population), scenario)
    evaluations = len(population)
    history = [(0, float(totals.min()))]

    for generation in range(1, generations + 1):
        candidates: Dict[bytes, np.ndarray] = {}
        for individual in population:
            candidates.setdefault(individual.tobytes(), individual)
        for individual in population:
            for child in _offspring(individual, subs, terminals, scenario.robots):
                candidates.setdefault(child.tobytes(), child)

        pool = list(candidates.values())
        stacked = np.stack(pool)
        pool_totals = batch_cost_total(stacked, scenario)
        evaluations += len(pool)
        order = rng.permutation(len(pool))
        order = order[np.argsort(pool_totals[order], kind="stable")]
        keep = order[:population_size]
        population = [pool[i] for i in keep]
        totals = pool_totals[keep]
        history.append((generation, float(totals[0])))
        if settings.DEBUG:
            for individual in population:
                _assert_feasible(scenario, individual)
        log.debug("GA generation", generation=generation, pool=len(pool), best_total=float(totals[0]))

    best_state = PathState(bits=population[int(np.argmin(totals))])
    best_cost = cost_total(best_state, scenario)
    log.info("GA finished", seed=seed, generations=generations, best_total=best_cost.total)
    return SolverResult(
        solver="ga",
        best_state=best_state,
        best_cost=best_cost,
        history=history,
        evaluations=evaluations,
        seed=seed,
        extras={"population_size": population_size, "generations": generations},
    )

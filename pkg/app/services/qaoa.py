"""Dense statevector QAOA with constrained SBF mixers.

Basis index bit ``k`` (little-endian, ``(index >> k) & 1``) holds decision
variable ``k = robot * E + edge``. Each layer applies the diagonal phase
separator ``exp(-i*gamma*c(x))`` and then the full mixer, a product of
partially controlled SBF rotations taken robot-major, sub-grids row-major.

The controlled mixer is simulated as a block unitary: the pair ``(x, x~)``
related by flipping four inner-edge qubits is rotated only when the SBF
validity function holds at both members. No ancilla qubits are simulated.
"""

import itertools
import math
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.models.quantum_models import OptimizerConfig, QaoaParams, QuantumState
from app.models.scenario_models import GridScenario, PathState, SubGrid
from app.services.cost import batch_cost_total
from app.services.grid import enumerate_paths, graph_of, is_valid_path
from app.services.sbf import enumerate_subgrids, initial_path, terminals_of
from app.utils.config import settings
from app.utils.exceptions import BudgetExceededError, InfeasibleScenarioError, QuantumStateError

log = structlog.get_logger(__name__)

EXPECTATION_NORM_TOLERANCE = 1e-6
COST_CHUNK = 1 << 16


def require_qubits(scenario: GridScenario) -> int:
    """Number of decision qubits, refusing scenarios beyond ``QUBIT_LIMIT``."""
    qubits = scenario.num_variables
    if qubits > settings.QUBIT_LIMIT:
        log.warning("Qubit guard refused scenario", qubits=qubits, limit=settings.QUBIT_LIMIT)
        raise BudgetExceededError(
            f"{qubits} qubits exceed the simulation limit of {settings.QUBIT_LIMIT}",
            {"qubits": qubits, "limit": settings.QUBIT_LIMIT},
        )
    return qubits


def state_index(state: PathState) -> int:
    index = 0
    for k, bit in enumerate(state.bits.reshape(-1)):
        if bit:
            index |= 1 << k
    return index


def decode_index(index: int, scenario: GridScenario) -> PathState:
    """Basis index back to the joint bit matrix."""
    n = scenario.num_variables
    bits = np.array([(int(index) >> k) & 1 for k in range(n)], dtype=bool)
    return PathState(bits=bits.reshape(scenario.robots, scenario.num_edges))


def _index_bits(indices: np.ndarray, n: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


@lru_cache(maxsize=2)
def cost_diagonal(scenario: GridScenario) -> np.ndarray:
    """``c(x)`` for every basis index, evaluated in chunks."""
    n = require_qubits(scenario)
    size = 1 << n
    diagonal = np.empty(size, dtype=np.float64)
    for start in range(0, size, COST_CHUNK):
        indices = np.arange(start, min(start + COST_CHUNK, size), dtype=np.int64)
        bits = _index_bits(indices, n).reshape(-1, scenario.robots, scenario.num_edges)
        diagonal[start:start + len(indices)] = batch_cost_total(bits, scenario)
    log.debug("Cost diagonal built", qubits=n, min=float(diagonal.min()))
    diagonal.flags.writeable = False
    return diagonal


@lru_cache(maxsize=8)
def feasible_indices(scenario: GridScenario) -> np.ndarray:
    """Basis indices whose every robot row is a valid path."""
    require_qubits(scenario)
    per_robot = []
    for robot in range(scenario.robots):
        offset = robot * scenario.num_edges
        per_robot.append(
            [sum(1 << (offset + int(e)) for e in np.flatnonzero(p)) for p in enumerate_paths(scenario, robot)]
        )
    indices = np.array(sorted(sum(combo) for combo in itertools.product(*per_robot)), dtype=np.int64)
    indices.flags.writeable = False
    return indices


def _qubits(scenario: GridScenario, robot: int, edges: Sequence[int]) -> List[int]:
    return [robot * scenario.num_edges + e for e in edges]


@lru_cache(maxsize=512)
def _rotation_pairs(
    scenario: GridScenario, robot: int, sub: SubGrid, controlled: bool
) -> Tuple[np.ndarray, int]:
    """Lower member of every rotated pair and the 4-qubit flip mask."""
    n = scenario.num_variables
    inner = _qubits(scenario, robot, sub.inner_edges)
    mask = sum(1 << q for q in inner)
    indices = np.arange(1 << n, dtype=np.int64)
    lower = ((indices >> inner[0]) & 1) == 0
    if controlled:
        inner_bits = [((indices >> q) & 1).astype(bool) for q in inner]
        any_on = inner_bits[0] | inner_bits[1] | inner_bits[2] | inner_bits[3]
        all_on = inner_bits[0] & inner_bits[1] & inner_bits[2] & inner_bits[3]
        parallel = (inner_bits[0] == inner_bits[2]) & (inner_bits[1] == inner_bits[3]) & (
            inner_bits[0] != inner_bits[1]
        )
        allowed = any_on & ~all_on & ~parallel

        source, dest = terminals_of(scenario, robot)
        for node, edges in zip(sub.nodes, sub.outside_edges):
            active = np.zeros(1 << n, dtype=np.int8)
            for q in _qubits(scenario, robot, edges):
                active += ((indices >> q) & 1).astype(np.int8)
            if source != dest and node in (source, dest):
                active += 1
            allowed &= active < 2
        lower &= allowed
    pairs = np.flatnonzero(lower)
    pairs.flags.writeable = False
    return pairs, mask


def _rotate(amplitudes: np.ndarray, pairs: np.ndarray, mask: int, beta: float) -> None:
    if not len(pairs):
        return
    c, s = math.cos(beta / 2), math.sin(beta / 2)
    partners = pairs ^ mask
    a = amplitudes[pairs]
    b = amplitudes[partners]
    amplitudes[pairs] = c * a - 1j * s * b
    amplitudes[partners] = c * b - 1j * s * a


def _mixer_schedule(scenario: GridScenario) -> List[Tuple[int, SubGrid]]:
    if scenario.rows < 2 or scenario.cols < 2:
        return []
    subs = enumerate_subgrids(scenario)
    return [(robot, sub) for robot in range(scenario.robots) for sub in subs]


def _wrap(scenario: GridScenario, amplitudes: np.ndarray) -> QuantumState:
    return QuantumState(num_qubits=scenario.num_variables, amplitudes=amplitudes)


def initial_state(
    scenario: GridScenario, population: Optional[Sequence[PathState]] = None
) -> QuantumState:
    """Equal superposition over the distinct bit strings of ``population``.

    The default population is the joined L-path of every robot.
    """
    n = require_qubits(scenario)
    if population is None:
        population = [
            PathState.from_robot_bits([initial_path(scenario, r) for r in range(scenario.robots)])
        ]
    if not population:
        raise InfeasibleScenarioError("QAOA needs a non-empty initial population")

    graph = graph_of(scenario)
    indices = set()
    for member, state in enumerate(population):
        if state.bits.shape != (scenario.robots, scenario.num_edges):
            raise InfeasibleScenarioError(
                f"Population member {member} has shape {state.bits.shape}", {"member": member}
            )
        for robot, (source, dest) in enumerate(scenario.endpoints):
            if not is_valid_path(graph, state.bits[robot], source, dest):
                raise InfeasibleScenarioError(
                    f"Population member {member} is infeasible for robot {robot}",
                    {"member": member, "robot": robot},
                )
        indices.add(state_index(state))

    amplitudes = np.zeros(1 << n, dtype=np.complex128)
    amplitudes[sorted(indices)] = 1 / math.sqrt(len(indices))
    return _wrap(scenario, amplitudes)


def apply_sbf_mixer(
    state: QuantumState, scenario: GridScenario, sub: SubGrid, robot: int, beta: float
) -> QuantumState:
    """Unconstrained ``exp(-i*beta*XXXX/2)`` on one robot's sub-grid qubits."""
    pairs, mask = _rotation_pairs(scenario, robot, sub, False)
    amplitudes = state.amplitudes.copy()
    _rotate(amplitudes, pairs, mask, beta)
    return _wrap(scenario, amplitudes)


def apply_partial_mixer(
    state: QuantumState, scenario: GridScenario, sub: SubGrid, robot: int, beta: float
) -> QuantumState:
    """SBF rotation restricted to pairs where the move is allowed at both members."""
    pairs, mask = _rotation_pairs(scenario, robot, sub, True)
    amplitudes = state.amplitudes.copy()
    _rotate(amplitudes, pairs, mask, beta)
    return _wrap(scenario, amplitudes)


def _full_mixer_inplace(amplitudes: np.ndarray, scenario: GridScenario, beta: float) -> None:
    for robot, sub in _mixer_schedule(scenario):
        pairs, mask = _rotation_pairs(scenario, robot, sub, True)
        _rotate(amplitudes, pairs, mask, beta)


def apply_full_mixer(state: QuantumState, scenario: GridScenario, beta: float) -> QuantumState:
    amplitudes = state.amplitudes.copy()
    _full_mixer_inplace(amplitudes, scenario, beta)
    return _wrap(scenario, amplitudes)


def apply_phase_separator(state: QuantumState, scenario: GridScenario, gamma: float) -> QuantumState:
    amplitudes = state.amplitudes * np.exp(-1j * gamma * cost_diagonal(scenario))
    return _wrap(scenario, amplitudes)


def _expectation(amplitudes: np.ndarray, scenario: GridScenario) -> float:
    probabilities = np.abs(amplitudes) ** 2
    norm = float(probabilities.sum())
    if abs(norm - 1.0) > EXPECTATION_NORM_TOLERANCE:
        raise QuantumStateError(f"State norm squared {norm} deviates from 1", {"norm": norm})
    return float(probabilities @ cost_diagonal(scenario))


def expectation(state: QuantumState, scenario: GridScenario) -> float:
    """``sum_x |a_x|^2 c(x)``."""
    return _expectation(state.amplitudes, scenario)


def _evolve(
    amplitudes: np.ndarray, scenario: GridScenario, betas: Sequence[float], gammas: Sequence[float]
) -> np.ndarray:
    diagonal = cost_diagonal(scenario)
    amplitudes = amplitudes.copy()
    for beta, gamma in zip(betas, gammas):
        amplitudes *= np.exp(-1j * gamma * diagonal)
        _full_mixer_inplace(amplitudes, scenario, beta)
    return amplitudes


def run_qaoa(
    scenario: GridScenario, params: QaoaParams, population: Optional[Sequence[PathState]] = None
) -> Tuple[QuantumState, float]:
    start = initial_state(scenario, population)
    amplitudes = _evolve(start.amplitudes, scenario, params.betas, params.gammas)
    return _wrap(scenario, amplitudes), _expectation(amplitudes, scenario)


def finite_difference_gradient(
    energy: Callable[[np.ndarray], float], theta: np.ndarray, shift: float
) -> np.ndarray:
    """Central differences, one pair of evaluations per angle."""
    grad = np.zeros_like(theta)
    for k in range(len(theta)):
        step = np.zeros_like(theta)
        step[k] = shift
        grad[k] = (energy(theta + step) - energy(theta - step)) / (2 * shift)
    return grad


def optimize(
    scenario: GridScenario,
    layers: int,
    population: Optional[Sequence[PathState]] = None,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
) -> Tuple[QaoaParams, List[float]]:
    """Nesterov-momentum descent on the expectation with central-difference gradients.

    Each restart draws angles uniformly from ``[0, pi)``. Returns the best
    parameters seen and the per-iteration history of the restart that found them.
    """
    if layers < 1:
        raise ValueError("QAOA needs at least one layer")
    config = config or OptimizerConfig()
    rng = np.random.default_rng(seed)
    start = initial_state(scenario, population).amplitudes

    def energy(theta: np.ndarray) -> float:
        value = _expectation(_evolve(start, scenario, theta[:layers], theta[layers:]), scenario)
        if not math.isfinite(value):
            raise QuantumStateError("Non-finite expectation during optimization", {"theta": theta.tolist()})
        return value

    best_theta: Optional[np.ndarray] = None
    best_value = math.inf
    best_history: List[float] = []

    for restart in range(config.restarts):
        theta = rng.uniform(0.0, math.pi, size=2 * layers)
        velocity = np.zeros_like(theta)
        run_best_theta, run_best = theta.copy(), energy(theta)
        history = []
        for _ in range(config.iterations):
            velocity = config.momentum * velocity + config.step_size * finite_difference_gradient(
                energy, theta - config.momentum * velocity, config.fd_shift
            )
            theta = theta - velocity
            value = energy(theta)
            history.append(value)
            if value < run_best:
                run_best_theta, run_best = theta.copy(), value
        log.debug("QAOA restart finished", restart=restart, best=run_best)
        if run_best < best_value:
            best_theta, best_value, best_history = run_best_theta, run_best, history

    log.info("QAOA optimization finished", layers=layers, best_expectation=best_value)
    return QaoaParams.from_vector(best_theta), best_history


def sample(
    state: QuantumState, shots: Optional[int] = None, seed: int = 0
) -> Tuple[Dict[int, int], np.ndarray]:
    """Multinomial measurement histogram (basis index -> count) and the exact distribution."""
    shots = settings.QAOA_SHOTS if shots is None else shots
    probabilities = state.probabilities()
    probabilities = probabilities / probabilities.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probabilities)
    histogram = {int(i): int(counts[i]) for i in np.flatnonzero(counts)}
    return histogram, probabilities


def feasible_probability(state: QuantumState, scenario: GridScenario) -> float:
    return float(state.probabilities()[feasible_indices(scenario)].sum())

"""Closed-form qubit and gate counts for the constrained QAOA circuit.

Symbolic estimates only; no gate list is compiled.
"""

from typing import Tuple

from app.models.quantum_models import ResourceReport
from app.models.scenario_models import GridScenario

ANCILLA_PER_ROBOT = 8

# 3-qubit Toffoli -> 6 CNOT + 9 single-qubit gates
TOFFOLI3_CNOT = 6
TOFFOLI3_SINGLE = 9

# SBF rotation body: Hadamard basis change on four qubits both ways plus a CNOT ladder
SBF_BODY_CNOT = 6
SBF_BODY_SINGLE = 8

# Controlled-Z core: two Z rotations and two CNOTs
CONTROLLED_Z_CNOT = 2
CONTROLLED_Z_SINGLE = 2

# Multi-controlled gates evaluating the validity logic, as (gate width, count)
LOGIC_GATES = (
    (5, 1),  # f1
    (5, 2),  # f2
    (3, 4),  # f3
    (7, 1),  # f = f1 & f2 & f3
)


def qubit_count(scenario: GridScenario) -> Tuple[int, int]:
    """(decision, ancilla) qubits: ``r*E`` and eight per robot."""
    return scenario.num_variables, ANCILLA_PER_ROBOT * scenario.robots


def phase_separator_counts(scenario: GridScenario) -> Tuple[int, int, int]:
    """(linear RZ, quadratic CNOT, quadratic single-qubit) gates."""
    re = scenario.num_variables
    return re, re * (re + 1), re * (re + 1) // 2


def toffoli_decomposition(qubits: int) -> Tuple[int, int]:
    """(3-qubit Toffolis, work qubits) for an ``(l+1)``-qubit Toffoli."""
    if qubits < 3:
        raise ValueError(f"A Toffoli gate needs at least 3 qubits, got {qubits}")
    if qubits == 3:
        return 1, 0
    l = qubits - 1
    return 4 * (l - 2), l - 2


def logic_toffoli_count() -> int:
    return sum(count * toffoli_decomposition(width)[0] for width, count in LOGIC_GATES)


def partial_mixer_counts() -> Tuple[int, int]:
    """(CNOT, single-qubit) gates of one controlled SBF mixer.

    Logic is computed and uncomputed, hence the factor two.
    """
    toffolis = logic_toffoli_count()
    cnot = 2 * toffolis * TOFFOLI3_CNOT + SBF_BODY_CNOT + CONTROLLED_Z_CNOT
    single = 2 * toffolis * TOFFOLI3_SINGLE + SBF_BODY_SINGLE + CONTROLLED_Z_SINGLE
    return cnot, single


def full_report(scenario: GridScenario, layers: int) -> ResourceReport:
    if layers < 1:
        raise ValueError("Resource estimates need at least one layer")
    decision, ancilla = qubit_count(scenario)
    phase_rz, phase_cnot, phase_single = phase_separator_counts(scenario)
    partial_cnot, partial_single = partial_mixer_counts()
    partial_mixers = scenario.robots * scenario.num_subgrids
    mixer_cnot = partial_mixers * partial_cnot
    mixer_single = partial_mixers * partial_single
    per_layer = {
        "N_C": phase_cnot + mixer_cnot,
        "N_S": phase_rz + phase_single + mixer_single,
    }
    return ResourceReport(
        rows=scenario.rows,
        cols=scenario.cols,
        robots=scenario.robots,
        layers=layers,
        qubits_decision=decision,
        qubits_ancilla=ancilla,
        toffoli_work_qubits=max(toffoli_decomposition(width)[1] for width, _ in LOGIC_GATES),
        partial_mixer_count=partial_mixers,
        phase_rz=phase_rz,
        phase_cnot=phase_cnot,
        phase_single=phase_single,
        partial_mixer_cnot=partial_cnot,
        partial_mixer_single=partial_single,
        mixer_cnot=mixer_cnot,
        mixer_single=mixer_single,
        layer_totals=per_layer,
        totals={key: layers * value for key, value in per_layer.items()},
        methodology=[
            "decision qubits r*E, ancilla 8 per robot; Toffoli work qubits listed separately",
            "phase separator: r*E RZ, quadratic terms 2 CNOT + 1 RZ per pair, r*E(r*E+1)/2 pairs",
            "(l+1)-qubit Toffoli -> 4(l-2) 3-qubit Toffolis with l-2 work qubits (l >= 3)",
            "validity logic: f1 one 5-qubit, f2 two 5-qubit, f3 four 3-qubit, f one 7-qubit Toffoli",
            "3-qubit Toffoli -> 6 CNOT + 9 single-qubit gates; logic doubled for uncompute",
            "SBF body read as 8 Hadamard + 6 CNOT; controlled-Z core 2 CNOT + 2 Z rotations",
            "full mixer = r(n-1)(m-1) partial mixers; p layers multiply the per-layer totals",
        ],
    )

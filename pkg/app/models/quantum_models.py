from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.config import settings

NORM_TOLERANCE = 1e-9


class QuantumState(BaseModel):
    """Dense amplitude vector over the decision-qubit basis.

    Basis index bit ``k`` holds decision variable ``k = robot * E + edge``.
    """

    num_qubits: int = Field(..., ge=0)
    amplitudes: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("amplitudes", mode="before")
    @classmethod
    def validate_amplitudes(cls, v: Any) -> np.ndarray:
        array = np.asarray(v, dtype=np.complex128)
        if array.ndim != 1:
            raise ValueError("Amplitudes must be a vector")
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def validate_norm(self) -> "QuantumState":
        if self.amplitudes.shape[0] != 2 ** self.num_qubits:
            raise ValueError(
                f"Expected {2 ** self.num_qubits} amplitudes, got {self.amplitudes.shape[0]}"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"State norm {norm} deviates from 1")
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self.num_qubits == other.num_qubits and bool(
            np.array_equal(self.amplitudes, other.amplitudes)
        )


class QaoaParams(BaseModel):
    layers: int = Field(..., ge=0)
    betas: Tuple[float, ...]
    gammas: Tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_lengths(self) -> "QaoaParams":
        if len(self.betas) != self.layers or len(self.gammas) != self.layers:
            raise ValueError("betas and gammas must each have one angle per layer")
        return self

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> "QaoaParams":
        """``theta`` holds betas followed by gammas."""
        layers = len(theta) // 2
        return cls(
            layers=layers,
            betas=tuple(float(b) for b in theta[:layers]),
            gammas=tuple(float(g) for g in theta[layers:]),
        )

    def to_vector(self) -> np.ndarray:
        return np.array(self.betas + self.gammas, dtype=float)


class OptimizerConfig(BaseModel):
    """Nesterov-momentum gradient descent with finite-difference gradients."""

    step_size: float = Field(default_factory=lambda: settings.QAOA_STEP_SIZE, gt=0)
    momentum: float = Field(default_factory=lambda: settings.QAOA_MOMENTUM, ge=0, lt=1)
    iterations: int = Field(default_factory=lambda: settings.QAOA_ITERATIONS, ge=1)
    fd_shift: float = Field(default_factory=lambda: settings.QAOA_FD_SHIFT, gt=0)
    restarts: int = Field(default_factory=lambda: settings.QAOA_RESTARTS, ge=1)

    model_config = ConfigDict(frozen=True)


class ResourceReport(BaseModel):
    """Qubit and gate counts of the QAOA circuit."""

    rows: int
    cols: int
    robots: int
    layers: int = Field(..., ge=1)
    qubits_decision: int = Field(..., ge=0)
    qubits_ancilla: int = Field(..., ge=0)
    toffoli_work_qubits: int = Field(..., ge=0)
    partial_mixer_count: int = Field(..., ge=0)
    phase_rz: int = Field(..., ge=0)
    phase_cnot: int = Field(..., ge=0)
    phase_single: int = Field(..., ge=0)
    partial_mixer_cnot: int = Field(..., ge=0)
    partial_mixer_single: int = Field(..., ge=0)
    mixer_cnot: int = Field(..., ge=0)
    mixer_single: int = Field(..., ge=0)
    layer_totals: Dict[str, int]
    totals: Dict[str, int]
    methodology: List[str]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_totals(self) -> "ResourceReport":
        per_layer_cnot = self.phase_cnot + self.mixer_cnot
        per_layer_single = self.phase_rz + self.phase_single + self.mixer_single
        if self.layer_totals != {"N_C": per_layer_cnot, "N_S": per_layer_single}:
            raise ValueError("Per-layer totals must be the sum of their components")
        if self.totals != {
            "N_C": self.layers * per_layer_cnot,
            "N_S": self.layers * per_layer_single,
        }:
            raise ValueError("Totals must equal layers times the per-layer totals")
        return self

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.scenario_models import GridScenario, PathState
from app.utils.config import settings


class CostBreakdown(BaseModel):
    """Objective components and their weighted total."""

    c1: float = Field(..., description="Obstacle/coverage edge-weight term")
    c2: float = Field(..., ge=0, description="Path-length balance term")
    c3: float = Field(..., ge=0, description="Node degree term")
    total: float

    model_config = ConfigDict(frozen=True)


class AnnealSchedule(BaseModel):
    """Geometric cooling schedule for simulated annealing."""

    t_initial: float = Field(..., gt=0)
    t_final: float = Field(..., gt=0)
    decay: float = Field(..., gt=0, lt=1)
    steps_per_temperature: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_range(self) -> "AnnealSchedule":
        if self.t_final >= self.t_initial:
            raise ValueError("t_final must be lower than t_initial")
        return self

    @classmethod
    def default_for(cls, scenario: GridScenario) -> "AnnealSchedule":
        steps = settings.SA_STEPS_FACTOR * max(scenario.num_subgrids, 1) * scenario.robots
        return cls(
            t_initial=settings.SA_T_INITIAL,
            t_final=settings.SA_T_FINAL,
            decay=settings.SA_DECAY,
            steps_per_temperature=steps,
        )

    def temperatures(self) -> List[float]:
        levels = []
        t = self.t_initial
        while t >= self.t_final:
            levels.append(t)
            t *= self.decay
        return levels


class SolverResult(BaseModel):
    solver: str
    best_state: PathState
    best_cost: CostBreakdown
    history: List[Tuple[int, float]] = Field(default_factory=list)
    evaluations: int = Field(0, ge=0)
    seed: Optional[int] = None
    extras: Dict[str, Any] = Field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "solver": self.solver,
            "best_cost": self.best_cost.model_dump(),
            "best_state": self.best_state.as_lists(),
            "evaluations": self.evaluations,
            "seed": self.seed,
            **self.extras,
        }

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.scenario.spec import ScenarioSpec


class BackendType(str, Enum):
    """Source of per-vehicle next speeds"""
    IDM = "idm"
    KRAUSS = "krauss"
    LEARNED = "learned"

    @property
    def is_oracle(self) -> bool:
        return self != BackendType.LEARNED


class RolloutConfig(BaseModel):
    """
    Rollout settings. `dt` falls back to the scenario's step length; a
    horizon of 0 yields an empty log.
    """
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    backend: BackendType = BackendType.KRAUSS
    model: Optional[Any] = None
    dt: Optional[float] = Field(None, gt=0)
    horizon: int = Field(600, ge=0)
    dci: int = Field(1, ge=1)
    seed: int = 0

    def step_length(self, spec: ScenarioSpec) -> float:
        return self.dt if self.dt is not None else spec.dt

    def require_oracle(self) -> None:
        if not self.backend.is_oracle:
            raise SimulationError(f"backend '{self.backend.value}' is not an oracle")

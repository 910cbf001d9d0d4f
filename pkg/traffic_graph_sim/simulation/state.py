"""
World and vehicle state for the step-based rollout.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, Mapping, Optional, Tuple

from traffic_graph_sim.oracles.signals import PhaseState
from traffic_graph_sim.scenario.demand import Departure
from traffic_graph_sim.scenario.spec import DEFAULT_VEHICLE_LENGTH

GAP_SENTINEL = 1e6
MIN_SAFE_GAP = 0.1


@dataclass(frozen=True)
class VehicleState:
    """
    Vehicle on a lane. `offset` is the front bumper position measured from
    the lane start; a set `fixed_speed` pins the vehicle to that speed.
    """
    id: str
    lane: str
    offset: float
    speed: float
    accel: float = 0.0
    route: Tuple[str, ...] = ()
    route_pos: int = 0
    length: float = DEFAULT_VEHICLE_LENGTH
    fixed_speed: Optional[float] = None

    @property
    def next_lane(self) -> Optional[str]:
        if self.route_pos + 1 < len(self.route):
            return self.route[self.route_pos + 1]
        return None

    def to_dict(self):
        return {
            "id": self.id,
            "lane": self.lane,
            "offset": self.offset,
            "speed": self.speed,
            "accel": self.accel,
            "route": list(self.route),
            "route_pos": self.route_pos,
            "length": self.length,
            "fixed_speed": self.fixed_speed,
        }


class LeaderKind(str, Enum):
    REAL = "real"
    DOWNSTREAM = "downstream"
    VIRTUAL = "virtual"
    NONE = "none"


@dataclass(frozen=True)
class LeaderInfo:
    gap: float
    speed: float
    leader_id: Optional[str]
    kind: LeaderKind

    @property
    def is_real(self) -> bool:
        return self.kind == LeaderKind.REAL


@dataclass(frozen=True)
class WorldState:
    """
    Snapshot of the simulated world at `step`. Vehicles are kept ordered by
    id; counters are cumulative over the rollout.
    """
    step: int
    vehicles: Tuple[VehicleState, ...] = ()
    pending: Tuple[Departure, ...] = ()
    phases: Mapping[str, PhaseState] = field(default_factory=dict)
    held_speeds: Mapping[str, float] = field(default_factory=dict)
    entered: int = 0
    exited: int = 0
    violations: int = 0
    clamps: int = 0

    def __iter__(self) -> Iterator[VehicleState]:
        return iter(self.vehicles)

    def __len__(self) -> int:
        return len(self.vehicles)

    def vehicle(self, vehicle_id: str) -> VehicleState:
        for vehicle in self.vehicles:
            if vehicle.id == vehicle_id:
                return vehicle
        raise KeyError(vehicle_id)

    def by_id(self) -> Dict[str, VehicleState]:
        return {vehicle.id: vehicle for vehicle in self.vehicles}

    def with_vehicles(self, *vehicles: VehicleState) -> "WorldState":
        """Copy with extra vehicles placed directly, counted as entered"""
        merged = sorted(self.vehicles + tuple(vehicles), key=lambda v: v.id)
        return replace(self, vehicles=tuple(merged), entered=self.entered + len(vehicles))

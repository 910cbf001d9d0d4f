import bisect
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional

from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.scenario.spec import ScenarioSpec
from traffic_graph_sim.simulation.state import GAP_SENTINEL, LeaderInfo, LeaderKind, VehicleState, WorldState


@dataclass
class LaneOccupancy:
    """Vehicles per lane, sorted by offset (rear to front)"""
    lanes: Dict[str, List[VehicleState]]
    _offsets: Dict[str, List[float]]

    @classmethod
    def of(cls, world: WorldState) -> "LaneOccupancy":
        lanes: Dict[str, List[VehicleState]] = {}
        for vehicle in world.vehicles:
            lanes.setdefault(vehicle.lane, []).append(vehicle)
        for queue in lanes.values():
            queue.sort(key=lambda v: (v.offset, v.id))
        return cls(lanes=lanes, _offsets={lane: [v.offset for v in queue] for lane, queue in lanes.items()})

    def ahead_of(self, vehicle: VehicleState) -> Optional[VehicleState]:
        queue = self.lanes.get(vehicle.lane, [])
        offsets = self._offsets.get(vehicle.lane, [])
        index = bisect.bisect_left(offsets, vehicle.offset)
        while index < len(queue):
            candidate = queue[index]
            if candidate.offset > vehicle.offset or (candidate.offset == vehicle.offset and candidate.id > vehicle.id):
                return candidate
            index += 1
        return None

    def rearmost(self, lane: str) -> Optional[VehicleState]:
        queue = self.lanes.get(lane)
        return queue[0] if queue else None


def resolve_leader(world: WorldState, v: VehicleState, spec: ScenarioSpec,
                   occupancy: Optional[LaneOccupancy] = None) -> LeaderInfo:
    """
    Leader seen by `v`: the nearest vehicle ahead on its own lane; a
    virtual stopped leader at the stop line when the next connection is
    red; otherwise the gap sentinel at the lane speed limit.
    """
    index = spec.network_index()
    if v.lane not in index.lanes:
        raise SimulationError(f"vehicle '{v.id}' on unknown lane '{v.lane}'")
    occupancy = occupancy or LaneOccupancy.of(world)
    leader = occupancy.ahead_of(v)
    if leader is not None:
        return LeaderInfo(gap=leader.offset - v.offset - leader.length, speed=leader.speed,
                          leader_id=leader.id, kind=LeaderKind.REAL)
    next_lane = v.next_lane
    if next_lane is not None:
        stop_line = index.stop_line(v.lane)
        if v.offset < stop_line and index.is_red(v.lane, next_lane, world.phases):
            return LeaderInfo(gap=stop_line - v.offset, speed=0.0, leader_id=None, kind=LeaderKind.VIRTUAL)
    return LeaderInfo(gap=GAP_SENTINEL, speed=index.lane(v.lane).speed_limit, leader_id=None, kind=LeaderKind.NONE)


def physical_leader(v: VehicleState, spec: ScenarioSpec, occupancy: LaneOccupancy) -> Optional[LeaderInfo]:
    """Nearest vehicle ahead along the route, signals ignored"""
    leader = occupancy.ahead_of(v)
    if leader is not None:
        return LeaderInfo(gap=leader.offset - v.offset - leader.length, speed=leader.speed,
                          leader_id=leader.id, kind=LeaderKind.REAL)
    next_lane = v.next_lane
    if next_lane is None:
        return None
    downstream = occupancy.rearmost(next_lane)
    if downstream is None:
        return None
    gap = (spec.network_index().lane(v.lane).length - v.offset) + downstream.offset - downstream.length
    return LeaderInfo(gap=gap, speed=downstream.speed, leader_id=downstream.id, kind=LeaderKind.DOWNSTREAM)


def control_leader(world: WorldState, v: VehicleState, spec: ScenarioSpec,
                   occupancy: Optional[LaneOccupancy] = None) -> LeaderInfo:
    """
    Leader a controller reacts to: `resolve_leader`, except that a vehicle
    with an open way through also looks at the rearmost vehicle on its
    next route lane.
    """
    occupancy = occupancy or LaneOccupancy.of(world)
    info = resolve_leader(world, v, spec, occupancy)
    if info.kind != LeaderKind.NONE:
        return info
    downstream = physical_leader(v, spec, occupancy)
    return downstream if downstream is not None else info


def resolve_leaders(world: WorldState, spec: ScenarioSpec) -> Mapping[str, LeaderInfo]:
    occupancy = LaneOccupancy.of(world)
    return {vehicle.id: resolve_leader(world, vehicle, spec, occupancy) for vehicle in world.vehicles}

"""
Scenario file models: network, signal programs, demand and normalization.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from traffic_graph_sim.errors import ScenarioError
from traffic_graph_sim.oracles.idm import IdmParams
from traffic_graph_sim.oracles.krauss import KraussParams

logger = logging.getLogger("traffic-graph-sim.scenario")

DEFAULT_LANE_LENGTH = 500.0
DEFAULT_SPEED_LIMIT = 15.0
DEFAULT_VEHICLE_LENGTH = 5.0
DEFAULT_STOP_LINE_OFFSET = 1.0
DEFAULT_DEPART_HEADWAY = 1.5


class Movement(str, Enum):
    """Turning movement of a junction connection"""
    STRAIGHT = "straight"
    LEFT = "left"
    RIGHT = "right"


MOVEMENTS: Tuple[Movement, ...] = (Movement.STRAIGHT, Movement.LEFT, Movement.RIGHT)


class _SpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RoadSpec(_SpecModel):
    id: str = Field(min_length=1)
    from_node: str = Field(alias="from")
    to_node: str = Field(alias="to")
    length: float = Field(DEFAULT_LANE_LENGTH, gt=0)
    lanes: int = Field(ge=1)
    speed_limit: float = Field(DEFAULT_SPEED_LIMIT, gt=0)

    def lane_ids(self) -> List[str]:
        return [f"{self.id}_{index}" for index in range(self.lanes)]


class JunctionSpec(_SpecModel):
    id: str = Field(min_length=1)
    x: float = 0.0
    y: float = 0.0


class ConnectionSpec(_SpecModel):
    from_lane: str
    to_lane: str
    movement: Movement

    @property
    def id(self) -> str:
        return connection_id(self.from_lane, self.to_lane)


class LaneSpec(BaseModel):
    """Lane derived from its road; never written in the scenario file"""
    id: str
    road: str
    index: int
    length: float
    speed_limit: float


class NetworkSpec(_SpecModel):
    roads: List[RoadSpec]
    junctions: List[JunctionSpec] = Field(default_factory=list)
    connections: List[ConnectionSpec] = Field(default_factory=list)
    stop_line_offset: float = Field(DEFAULT_STOP_LINE_OFFSET, ge=0)

    def lanes(self) -> List[LaneSpec]:
        return [
            LaneSpec(id=lane_id, road=road.id, index=index,
                     length=road.length, speed_limit=road.speed_limit)
            for road in self.roads
            for index, lane_id in enumerate(road.lane_ids())
        ]


class PhaseSpec(_SpecModel):
    green: List[str] = Field(default_factory=list)
    duration: float = Field(gt=0)


class SignalProgramSpec(_SpecModel):
    id: str = Field(min_length=1)
    junction: Optional[str] = None
    controlled: Optional[List[str]] = None
    phases: List[PhaseSpec] = Field(min_length=1)

    @property
    def cycle(self) -> float:
        return sum(phase.duration for phase in self.phases)

    def controlled_connections(self) -> List[str]:
        """Declared controlled set, else every connection green in some phase"""
        if self.controlled is not None:
            return list(self.controlled)
        seen: Dict[str, None] = {}
        for phase in self.phases:
            for cid in phase.green:
                seen.setdefault(cid, None)
        return list(seen)


class RouteSpec(_SpecModel):
    id: str = Field(min_length=1)
    lanes: List[str] = Field(min_length=1)
    weight: float = Field(1.0, ge=0)


class DemandSpec(_SpecModel):
    count: int = Field(ge=0)
    depart_start: int = Field(0, ge=0)
    depart_end: Optional[int] = None
    routes: List[RouteSpec] = Field(default_factory=list)
    vehicle_length: float = Field(DEFAULT_VEHICLE_LENGTH, gt=0)
    depart_headway: float = Field(DEFAULT_DEPART_HEADWAY, gt=0)

    @model_validator(mode="after")
    def _check_routes(self) -> "DemandSpec":
        if self.count > 0:
            if not self.routes:
                raise ValueError("demand with vehicles needs at least one route")
            if sum(route.weight for route in self.routes) <= 0:
                raise ValueError("route weights must sum to a positive value")
        if self.depart_end is not None and self.depart_end <= self.depart_start:
            raise ValueError(f"depart_end {self.depart_end} must exceed depart_start {self.depart_start}")
        return self

    @property
    def window_end(self) -> int:
        """Exclusive end of the departure window; one departure per step when undeclared"""
        if self.depart_end is not None:
            return self.depart_end
        return self.depart_start + max(self.count, 1)


class NormalizationSpec(_SpecModel):
    v_ref: float = Field(DEFAULT_SPEED_LIMIT, gt=0)
    s_ref: float = Field(100.0, gt=0)
    a_ref: float = Field(3.0, gt=0)


class ScenarioSpec(_SpecModel):
    name: str = "scenario"
    description: str = ""
    dt: float = Field(gt=0)
    network: NetworkSpec
    signals: List[SignalProgramSpec] = Field(default_factory=list)
    demand: DemandSpec
    normalization: NormalizationSpec = Field(default_factory=NormalizationSpec)
    idm: IdmParams = Field(default_factory=IdmParams)
    krauss: KraussParams = Field(default_factory=KraussParams)

    _index: Any = PrivateAttr(default=None)

    def network_index(self):
        """Cached lane/connection lookup tables"""
        if self._index is None:
            from traffic_graph_sim.scenario.network import NetworkIndex
            self._index = NetworkIndex.from_spec(self)
        return self._index

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def connection_id(from_lane: str, to_lane: str) -> str:
    return f"{from_lane}>{to_lane}"


def reference_violations(spec: ScenarioSpec) -> List[str]:
    """Every cross-reference problem in an otherwise well-formed scenario"""
    violations: List[str] = []
    network = spec.network

    road_ids = [road.id for road in network.roads]
    for rid in sorted({r for r in road_ids if road_ids.count(r) > 1}):
        violations.append(f"duplicate road id '{rid}'")
    junction_ids = [junction.id for junction in network.junctions]
    for jid in sorted({j for j in junction_ids if junction_ids.count(j) > 1}):
        violations.append(f"duplicate junction id '{jid}'")

    lane_ids = {lane.id for lane in network.lanes()}
    connection_ids = set()
    for conn in network.connections:
        for lane in (conn.from_lane, conn.to_lane):
            if lane not in lane_ids:
                violations.append(f"connection {conn.id} references unknown lane '{lane}'")
        if conn.id in connection_ids:
            violations.append(f"duplicate connection {conn.id}")
        connection_ids.add(conn.id)

    signal_ids = set()
    for signal in spec.signals:
        if signal.id in signal_ids:
            violations.append(f"duplicate signal id '{signal.id}'")
        signal_ids.add(signal.id)
        if signal.junction is not None and signal.junction not in junction_ids:
            violations.append(f"signal '{signal.id}' references unknown junction '{signal.junction}'")
        controlled = signal.controlled_connections()
        for cid in controlled:
            if cid not in connection_ids:
                violations.append(f"signal '{signal.id}' controls unknown connection '{cid}'")
        greens = {cid for phase in signal.phases for cid in phase.green}
        for cid in controlled:
            if cid not in greens:
                violations.append(f"signal '{signal.id}' never gives green to '{cid}'")
        for cid in sorted(greens - set(controlled)):
            violations.append(f"signal '{signal.id}' phase lists uncontrolled connection '{cid}'")

    controllers: Dict[str, str] = {}
    for signal in spec.signals:
        for cid in signal.controlled_connections():
            if cid in controllers and controllers[cid] != signal.id:
                violations.append(f"connection '{cid}' controlled by both '{controllers[cid]}' and '{signal.id}'")
            controllers.setdefault(cid, signal.id)

    for route in spec.demand.routes:
        for lane in route.lanes:
            if lane not in lane_ids:
                violations.append(f"route '{route.id}' references unknown lane '{lane}'")
        for upstream, downstream in zip(route.lanes, route.lanes[1:]):
            if (upstream in lane_ids and downstream in lane_ids
                    and connection_id(upstream, downstream) not in connection_ids):
                violations.append(f"route '{route.id}' has no connection from '{upstream}' to '{downstream}'")
    return violations


def _format_validation_error(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        messages.append(f"{location}: {item['msg']}")
    return messages


def scenario_from_dict(data: Dict[str, Any]) -> ScenarioSpec:
    try:
        spec = ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(_format_validation_error(e)) from e
    violations = reference_violations(spec)
    if violations:
        raise ScenarioError(violations)
    return spec


def parse_scenario(text: str) -> ScenarioSpec:
    """Validated scenario, or ScenarioError listing every violation"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"syntax error: {e}"]) from e
    if not isinstance(data, dict):
        raise ScenarioError(["scenario file must hold a JSON object"])
    spec = scenario_from_dict(data)
    logger.debug(f"Parsed scenario '{spec.name}': {len(spec.network.roads)} roads, "
                 f"{spec.demand.count} vehicles, {len(spec.signals)} signals")
    return spec


def load_scenario(path: Union[str, Path]) -> ScenarioSpec:
    spec = parse_scenario(Path(path).read_text(encoding="utf-8"))
    logger.info(f"Loaded scenario '{spec.name}' from {path}")
    return spec


def bundled_scenario_path(name: str = "intersection4") -> Path:
    return Path(__file__).resolve().parent.parent / "scenarios" / f"{name}.json"


def load_bundled_scenario(name: str = "intersection4") -> ScenarioSpec:
    """Scenario shipped as package data"""
    return load_scenario(bundled_scenario_path(name))

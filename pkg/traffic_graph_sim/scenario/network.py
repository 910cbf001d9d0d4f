"""
Traffic graph schema and the static network graph.

The network graph holds one node per road, lane, junction and signal. Car
nodes and their edges are layered on top per step by the encoder.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from traffic_graph_sim.graph.schema import EdgeType, NodeType, Schema
from traffic_graph_sim.graph.snapshot import EdgeRef, GraphSnapshot, NodeRef, new_snapshot
from traffic_graph_sim.oracles.signals import PhaseState, signal_phase
from traffic_graph_sim.scenario.spec import (
    MOVEMENTS, ConnectionSpec, LaneSpec, Movement, ScenarioSpec, SignalProgramSpec, connection_id
)

logger = logging.getLogger("traffic-graph-sim.scenario")

CAR = "car"
LANE = "lane"
ROAD = "road"
JUNCTION = "junction"
SIGNAL = "signal"

FOLLOWS = "follows"
LEADS = "leads"
ON_LANE = "on_lane"
HOSTS = "hosts"
ON_ROAD = "on_road"
CONNECTS_TO = "connects_to"
CONTROLS = "controls"

CAR_FEATURES = 4
LANE_FEATURES = 3
ROAD_FEATURES = 2
JUNCTION_FEATURES = 2


def traffic_schema(max_phases: int = 1) -> Schema:
    """Node and edge kinds of the traffic graph"""
    schema = Schema(
        node_types=(
            NodeType(CAR, CAR_FEATURES),
            NodeType(LANE, LANE_FEATURES),
            NodeType(ROAD, ROAD_FEATURES),
            NodeType(JUNCTION, JUNCTION_FEATURES),
            NodeType(SIGNAL, max(1, max_phases)),
        ),
        edge_types=(
            EdgeType(FOLLOWS, CAR, CAR, 2),
            EdgeType(LEADS, CAR, CAR, 2),
            EdgeType(ON_LANE, CAR, LANE, 1),
            EdgeType(HOSTS, LANE, CAR, 3),
            EdgeType(ON_ROAD, LANE, ROAD, 0),
            EdgeType(CONNECTS_TO, LANE, LANE, len(MOVEMENTS)),
            EdgeType(CONTROLS, SIGNAL, LANE, 1),
        ),
    )
    schema.validate()
    return schema


def scenario_schema(spec: ScenarioSpec) -> Schema:
    return traffic_schema(max((len(s.phases) for s in spec.signals), default=1))


def movement_one_hot(movement: Movement) -> List[float]:
    return [1.0 if movement == m else 0.0 for m in MOVEMENTS]


def phase_one_hot(state: Optional[PhaseState], width: int) -> List[float]:
    features = [0.0] * width
    if state is not None:
        features[state.index] = 1.0
    return features


@dataclass
class NetworkLayout:
    """Node and edge references of the network graph, keyed by scenario ids"""
    roads: Dict[str, NodeRef] = field(default_factory=dict)
    lanes: Dict[str, NodeRef] = field(default_factory=dict)
    junctions: Dict[str, NodeRef] = field(default_factory=dict)
    signals: Dict[str, NodeRef] = field(default_factory=dict)
    controls: Dict[Tuple[str, str], EdgeRef] = field(default_factory=dict)
    node_count: int = 0


@dataclass
class NetworkIndex:
    """Lookup tables over a validated scenario network"""
    lanes: Dict[str, LaneSpec]
    connections: Dict[str, ConnectionSpec]
    signals: Dict[str, SignalProgramSpec]
    controller: Dict[str, str]
    stop_line_offset: float
    schema: Schema
    layout: NetworkLayout
    graph: GraphSnapshot
    _route_lengths: Dict[Tuple[str, ...], float] = field(default_factory=dict)

    @classmethod
    def from_spec(cls, spec: ScenarioSpec) -> "NetworkIndex":
        controller = {}
        for signal in spec.signals:
            for cid in signal.controlled_connections():
                controller.setdefault(cid, signal.id)
        graph, layout = _build_network(spec)
        return cls(
            lanes={lane.id: lane for lane in spec.network.lanes()},
            connections={conn.id: conn for conn in spec.network.connections},
            signals={signal.id: signal for signal in spec.signals},
            controller=controller,
            stop_line_offset=spec.network.stop_line_offset,
            schema=graph.schema,
            layout=layout,
            graph=graph,
        )

    def lane(self, lane_id: str) -> LaneSpec:
        return self.lanes[lane_id]

    def stop_line(self, lane_id: str) -> float:
        return self.lanes[lane_id].length - self.stop_line_offset

    def route_length(self, route: Sequence[str]) -> float:
        key = tuple(route)
        if key not in self._route_lengths:
            self._route_lengths[key] = sum(self.lanes[lane].length for lane in key)
        return self._route_lengths[key]

    def phases_at(self, t: float) -> Dict[str, PhaseState]:
        return {sid: signal_phase(program, t) for sid, program in self.signals.items()}

    def is_red(self, from_lane: str, to_lane: str, phases: Mapping[str, PhaseState]) -> bool:
        """True when the connection is signal-controlled and not green in the active phase"""
        cid = connection_id(from_lane, to_lane)
        sid = self.controller.get(cid)
        if sid is None:
            return False
        state = phases.get(sid)
        return state is None or cid not in state.green


def _build_network(spec: ScenarioSpec) -> Tuple[GraphSnapshot, NetworkLayout]:
    norm = spec.normalization
    network = spec.network
    schema = scenario_schema(spec)
    signal_width = schema.node_feature_dim(SIGNAL)
    g = new_snapshot(schema, 0)
    layout = NetworkLayout()

    controlled_lanes = set()
    for signal in spec.signals:
        for cid in signal.controlled_connections():
            controlled_lanes.add(cid.split(">", 1)[0])

    for road in network.roads:
        layout.roads[road.id] = g.add_node(ROAD, [road.length / norm.s_ref, float(road.lanes)])
    for lane in network.lanes():
        layout.lanes[lane.id] = g.add_node(LANE, [
            lane.length / norm.s_ref,
            lane.speed_limit / norm.v_ref,
            1.0 if lane.id in controlled_lanes else 0.0,
        ])
    for junction in network.junctions:
        layout.junctions[junction.id] = g.add_node(JUNCTION, [junction.x / norm.s_ref, junction.y / norm.s_ref])
    initial = {signal.id: signal_phase(signal, 0.0) for signal in spec.signals}
    for signal in spec.signals:
        layout.signals[signal.id] = g.add_node(SIGNAL, phase_one_hot(initial[signal.id], signal_width))

    for lane in network.lanes():
        g.add_edge(layout.lanes[lane.id], layout.roads[lane.road], ON_ROAD, [])
    for conn in network.connections:
        g.add_edge(layout.lanes[conn.from_lane], layout.lanes[conn.to_lane], CONNECTS_TO,
                   movement_one_hot(conn.movement))
    for signal in spec.signals:
        green_lanes = {cid.split(">", 1)[0] for cid in initial[signal.id].green}
        for cid in signal.controlled_connections():
            from_lane = cid.split(">", 1)[0]
            key = (signal.id, from_lane)
            if key in layout.controls:
                continue
            layout.controls[key] = g.add_edge(layout.signals[signal.id], layout.lanes[from_lane], CONTROLS,
                                              [1.0 if from_lane in green_lanes else 0.0])
    layout.node_count = g.node_count()
    g.seal()
    return g, layout


def build_network_graph(spec: ScenarioSpec) -> GraphSnapshot:
    """Sealed timestamp-0 snapshot with every road, lane, junction and signal; no cars"""
    graph = spec.network_index().graph
    logger.debug(f"Network graph for '{spec.name}': {graph.node_count(ROAD)} roads, "
                 f"{graph.node_count(LANE)} lanes, {graph.edge_count(CONNECTS_TO)} connections")
    return graph

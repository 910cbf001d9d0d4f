"""
World-to-graph encoding.

Each active vehicle becomes a car node [speed/v_ref, accel/a_ref,
offset/lane_length, remaining route fraction]. A car points at its lane
with on_lane [distance to lane end/s_ref]; the lane answers with hosts
[distance to lane end/s_ref, stop gap, stop flag], where the stop flag is
set while the car's next connection is red and the stop gap is the
distance to the stop line over s_ref, clipped to [0, 1], or 1 without a
stop. Same-lane leaders are tied by follows and leads with
[gap/s_ref, (v_follower - v_leader)/v_ref]. Signal nodes and controls
edges carry the active phase.
"""

import logging
from typing import TYPE_CHECKING, Dict, Tuple

from traffic_graph_sim.errors import SimulationError
from traffic_graph_sim.graph.snapshot import GraphSnapshot, NodeRef
from traffic_graph_sim.scenario.network import (
    CAR, CONTROLS, FOLLOWS, HOSTS, LEADS, ON_LANE, SIGNAL, phase_one_hot
)
from traffic_graph_sim.scenario.spec import ScenarioSpec

if TYPE_CHECKING:
    from traffic_graph_sim.simulation.state import WorldState

logger = logging.getLogger("traffic-graph-sim.scenario")


def encode_world(world: "WorldState", net: GraphSnapshot,
                 spec: ScenarioSpec) -> Tuple[GraphSnapshot, Dict[str, NodeRef]]:
    """Sealed snapshot of `world` plus the car node of every vehicle id"""
    from traffic_graph_sim.simulation.leaders import LaneOccupancy, resolve_leader

    index = spec.network_index()
    layout = index.layout
    if net.node_count() != layout.node_count or net.schema != index.schema:
        raise SimulationError(f"network graph does not belong to scenario '{spec.name}'")
    norm = spec.normalization

    g = net.derive(world.step)
    signal_width = index.schema.node_feature_dim(SIGNAL)
    for sid, ref in layout.signals.items():
        g.set_node_features(ref, phase_one_hot(world.phases.get(sid), signal_width))
    for (sid, lane_id), edge in layout.controls.items():
        state = world.phases.get(sid)
        green = state is not None and any(cid.split(">", 1)[0] == lane_id for cid in state.green)
        g.set_edge_features(edge, [1.0 if green else 0.0])

    cars: Dict[str, NodeRef] = {}
    for vehicle in world.vehicles:
        if vehicle.lane not in layout.lanes:
            raise SimulationError(f"vehicle '{vehicle.id}' on unknown lane '{vehicle.lane}'")
        lane = index.lane(vehicle.lane)
        route = vehicle.route or (vehicle.lane,)
        travelled = sum(index.lane(l).length for l in route[:vehicle.route_pos]) + vehicle.offset
        total = index.route_length(route)
        remaining = max(0.0, 1.0 - travelled / total)
        cars[vehicle.id] = g.add_node(CAR, [
            vehicle.speed / norm.v_ref,
            vehicle.accel / norm.a_ref,
            vehicle.offset / lane.length,
            remaining,
        ])
        to_lane_end = (lane.length - vehicle.offset) / norm.s_ref
        next_lane = vehicle.next_lane
        must_stop = next_lane is not None and index.is_red(vehicle.lane, next_lane, world.phases)
        stop_gap = min(max(index.stop_line(vehicle.lane) - vehicle.offset, 0.0), norm.s_ref) / norm.s_ref
        g.add_edge(cars[vehicle.id], layout.lanes[vehicle.lane], ON_LANE, [to_lane_end])
        g.add_edge(layout.lanes[vehicle.lane], cars[vehicle.id], HOSTS,
                   [to_lane_end, stop_gap if must_stop else 1.0, 1.0 if must_stop else 0.0])

    occupancy = LaneOccupancy.of(world)
    by_id = world.by_id()
    for vehicle in world.vehicles:
        info = resolve_leader(world, vehicle, spec, occupancy)
        if not info.is_real:
            continue
        leader = by_id[info.leader_id]
        features = [info.gap / norm.s_ref, (vehicle.speed - leader.speed) / norm.v_ref]
        g.add_edge(cars[vehicle.id], cars[leader.id], FOLLOWS, features)
        g.add_edge(cars[leader.id], cars[vehicle.id], LEADS, features)

    g.seal()
    logger.debug(f"Encoded step {world.step}: {len(cars)} cars, {g.edge_count(FOLLOWS)} follows edges")
    return g, cars


def world_to_graph(world: "WorldState", net: GraphSnapshot, spec: ScenarioSpec) -> GraphSnapshot:
    graph, _ = encode_world(world, net, spec)
    return graph

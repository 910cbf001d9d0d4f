"""
Scenario definition and graph construction.

Road networks, signal programs and demand parsed from JSON, the static
network graph, and the per-step encoding of a world into a graph snapshot.
"""

from traffic_graph_sim.scenario.spec import (
    ConnectionSpec, DemandSpec, JunctionSpec, LaneSpec, Movement, NetworkSpec, NormalizationSpec,
    PhaseSpec, RoadSpec, RouteSpec, ScenarioSpec, SignalProgramSpec,
    bundled_scenario_path, load_bundled_scenario, load_scenario, parse_scenario
)
from traffic_graph_sim.scenario.network import (
    NetworkIndex, build_network_graph, scenario_schema, traffic_schema
)
from traffic_graph_sim.scenario.demand import Departure, scale_demand, spawn_departures
from traffic_graph_sim.scenario.encoding import encode_world, world_to_graph

__all__ = [
    "ConnectionSpec",
    "DemandSpec",
    "JunctionSpec",
    "LaneSpec",
    "Movement",
    "NetworkSpec",
    "NormalizationSpec",
    "PhaseSpec",
    "RoadSpec",
    "RouteSpec",
    "ScenarioSpec",
    "SignalProgramSpec",
    "bundled_scenario_path",
    "load_bundled_scenario",
    "load_scenario",
    "parse_scenario",
    "NetworkIndex",
    "build_network_graph",
    "scenario_schema",
    "traffic_schema",
    "Departure",
    "scale_demand",
    "spawn_departures",
    "encode_world",
    "world_to_graph",
]

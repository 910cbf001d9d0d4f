import copy
import math
from typing import Any, Dict, List, Optional

import pytest
import torch
import torch.nn.functional as F

from traffic_graph_sim.graph.schema import EdgeType, NodeType, Schema
from traffic_graph_sim.graph.snapshot import GraphSnapshot, new_snapshot
from traffic_graph_sim.learner.tensors import DTYPE
from traffic_graph_sim.scenario.spec import ScenarioSpec, load_bundled_scenario, scenario_from_dict
from traffic_graph_sim.simulation.state import VehicleState


def one_lane_dict(length: float = 1000.0, count: int = 0, dt: float = 1.0, **demand: Any) -> Dict[str, Any]:
    """Single road A with one lane A_0 and no signal"""
    return {
        "name": "one-lane",
        "dt": dt,
        "network": {
            "roads": [{"id": "A", "from": "J0", "to": "J1", "length": length, "lanes": 1, "speed_limit": 15.0}],
            "stop_line_offset": 0.0,
        },
        "demand": {"count": count, "routes": [{"id": "through", "lanes": ["A_0"]}], **demand},
    }


def signalized_dict(red_first: bool = True, count: int = 0) -> Dict[str, Any]:
    """Roads A -> B through junction J with a two-phase signal on A_0>B_0"""
    phases = [{"green": [], "duration": 30.0}, {"green": ["A_0>B_0"], "duration": 30.0}]
    if not red_first:
        phases.reverse()
    return {
        "name": "signalized",
        "dt": 1.0,
        "network": {
            "roads": [
                {"id": "A", "from": "W", "to": "J", "length": 100.0, "lanes": 1, "speed_limit": 15.0},
                {"id": "B", "from": "J", "to": "E", "length": 100.0, "lanes": 1, "speed_limit": 15.0},
            ],
            "junctions": [{"id": "J", "x": 100.0, "y": 0.0}],
            "connections": [{"from_lane": "A_0", "to_lane": "B_0", "movement": "straight"}],
            "stop_line_offset": 0.0,
        },
        "signals": [{"id": "S", "junction": "J", "controlled": ["A_0>B_0"], "phases": phases}],
        "demand": {"count": count, "depart_end": max(count, 1) * 4,
                   "routes": [{"id": "through", "lanes": ["A_0", "B_0"]}]},
    }


def car(vid: str, lane: str, offset: float, speed: float, route: Optional[List[str]] = None,
        **kwargs: Any) -> VehicleState:
    return VehicleState(id=vid, lane=lane, offset=offset, speed=speed,
                        route=tuple(route) if route is not None else (lane,), **kwargs)


@pytest.fixture(scope="session")
def case_study_spec() -> ScenarioSpec:
    return load_bundled_scenario()


@pytest.fixture
def one_lane_spec() -> ScenarioSpec:
    return scenario_from_dict(one_lane_dict())


@pytest.fixture
def red_spec() -> ScenarioSpec:
    return scenario_from_dict(signalized_dict(red_first=True))


@pytest.fixture
def green_spec() -> ScenarioSpec:
    return scenario_from_dict(signalized_dict(red_first=False))


@pytest.fixture
def scenario_dict():
    """Deep copies of the test scenario documents, free to mutate"""
    def make(kind: str = "one_lane", **kwargs: Any) -> Dict[str, Any]:
        builder = {"one_lane": one_lane_dict, "signalized": signalized_dict}[kind]
        return copy.deepcopy(builder(**kwargs))
    return make


@pytest.fixture
def toy_schema() -> Schema:
    """car(3) and lane(2) nodes; follows car->car(2), on_lane car->lane(1), hosts lane->car(0)"""
    return Schema(
        node_types=(NodeType("car", 3), NodeType("lane", 2)),
        edge_types=(
            EdgeType("follows", "car", "car", 2),
            EdgeType("on_lane", "car", "lane", 1),
            EdgeType("hosts", "lane", "car", 0),
        ),
    )


@pytest.fixture
def toy_graph(toy_schema: Schema) -> GraphSnapshot:
    """Sealed 5-node graph: three cars in a platoon on lane 0, lane 1 empty"""
    g = new_snapshot(toy_schema, 3)
    cars = [g.add_node("car", [0.1 * i, 0.5 - 0.2 * i, 0.3]) for i in range(3)]
    lanes = [g.add_node("lane", [1.0, 0.5]), g.add_node("lane", [0.8, 1.0])]
    g.add_edge(cars[0], cars[1], "follows", [0.35, 0.1])
    g.add_edge(cars[1], cars[2], "follows", [0.20, -0.05])
    for c in cars:
        g.add_edge(c, lanes[0], "on_lane", [0.5])
        g.add_edge(lanes[0], c, "hosts", [])
    return g.seal()


def dense_layer(layer, graph, h):
    """Per-node loop over in-edges, no scatter operations"""
    heads, d_k = layer.heads, layer.d_k
    rows = {record.ref: row for row, record in enumerate(graph.nodes())}
    out = torch.empty_like(h)
    for record in graph.nodes():
        v = rows[record.ref]
        query = layer.q_linears[record.kind](h[v]).view(heads, d_k)
        scores, messages = [], []
        for u_ref, e_ref in graph.in_neighbors(record.ref):
            edge = graph.edge(e_ref)
            u = rows[u_ref]
            key = layer.k_linears[graph.node_kind(u_ref)](h[u])
            value = layer.v_linears[graph.node_kind(u_ref)](h[u])
            if edge.kind in layer.edge_linears:
                projected = layer.edge_linears[edge.kind](torch.tensor(edge.features, dtype=DTYPE))
                key = key + projected
                value = value + projected
            key = key.view(heads, d_k)
            value = value.view(heads, d_k)
            head_scores = []
            head_messages = []
            for i in range(heads):
                k_att = key[i] @ layer.relation_att[edge.kind][i]
                head_scores.append(k_att @ query[i] * layer.relation_pri[edge.kind] / math.sqrt(d_k))
                head_messages.append(value[i] @ layer.relation_msg[edge.kind][i])
            scores.append(torch.stack(head_scores))
            messages.append(torch.stack(head_messages))
        if scores:
            weights = torch.softmax(torch.stack(scores), dim=0)
            aggregated = (weights.unsqueeze(-1) * torch.stack(messages)).sum(dim=0).reshape(-1)
        else:
            aggregated = torch.zeros(layer.hidden, dtype=DTYPE)
        out[v] = layer.a_linears[record.kind](F.gelu(aggregated)) + h[v]
    return out

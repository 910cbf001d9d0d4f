"""Tests for the heterogeneous graph store and its file format."""

import json

import pytest

from traffic_graph_sim.errors import (
    DimensionMismatchError, EndpointError, GraphFormatError, NonFiniteFeatureError, SchemaError,
    SealedSnapshotError, UnknownKindError, UnknownNodeError
)
from traffic_graph_sim.graph import (
    EdgeType, NodeType, Schema, add_edge, add_node, dumps_graph, graph_to_dict, in_neighbors,
    load_graph, dump_graph, loads_graph, new_snapshot, seal
)
from traffic_graph_sim.scenario.network import traffic_schema


class TestSchema:
    """Schema validation."""

    def test_traffic_schema_is_valid(self):
        schema = traffic_schema(4)
        assert schema.node_type_names == ["car", "lane", "road", "junction", "signal"]
        assert schema.node_feature_dim("signal") == 4

    def test_duplicate_node_type_rejected(self):
        schema = Schema(node_types=(NodeType("car", 3), NodeType("car", 2)))
        with pytest.raises(SchemaError, match="duplicate node type 'car'"):
            new_snapshot(schema, 0)

    def test_dangling_endpoint_kind_rejected(self):
        schema = Schema(node_types=(NodeType("car", 3),),
                        edge_types=(EdgeType("on_lane", "car", "lane", 1),))
        with pytest.raises(SchemaError, match="unknown node type 'lane'"):
            schema.validate()

    def test_negative_dimension_rejected(self):
        with pytest.raises(SchemaError, match="negative"):
            Schema(node_types=(NodeType("car", -1),)).validate()


class TestSnapshot:
    """Node and edge insertion, lookups and sealing."""

    def test_new_snapshot_is_empty(self):
        g = new_snapshot(traffic_schema(), 0)
        assert g.node_count() == 0
        assert g.edge_count() == 0
        assert not g.sealed

    def test_timestamp_is_kept(self):
        assert new_snapshot(traffic_schema(), 42).timestamp == 42

    def test_add_node(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = add_node(g, "car", [0.0, 0.0, 0.0])
        b = add_node(g, "car", [1.0, 2.0, 3.0])
        assert g.node_count() == 2
        assert a != b
        assert g.node_kind(b) == "car"
        assert g.get_node_features(b) == (1.0, 2.0, 3.0)

    def test_dimension_mismatch(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        with pytest.raises(DimensionMismatchError):
            g.add_node("car", [0.0, 0.0])

    def test_unknown_kind(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        with pytest.raises(UnknownKindError):
            g.add_node("bus", [0.0])

    def test_non_finite_feature(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        with pytest.raises(NonFiniteFeatureError):
            g.add_node("car", [0.0, float("nan"), 0.0])

    def test_add_edge(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        b = g.add_node("car", [0.0] * 3)
        e = add_edge(g, a, b, "follows", [35.0, 0.0])
        assert g.edge_count() == 1
        assert g.edge_endpoints(e) == (a, b)
        assert g.get_edge_features(e) == (35.0, 0.0)

    def test_edge_kind_mismatch(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        lane = g.add_node("lane", [0.0] * 2)
        with pytest.raises(EndpointError, match="declared car->car"):
            g.add_edge(a, lane, "follows", [1.0, 0.0])

    def test_self_loop_rejected(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        with pytest.raises(EndpointError, match="self-loop"):
            g.add_edge(a, a, "follows", [1.0, 0.0])

    def test_parallel_edge_rejected(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        b = g.add_node("car", [0.0] * 3)
        g.add_edge(a, b, "follows", [1.0, 0.0])
        with pytest.raises(EndpointError, match="parallel"):
            g.add_edge(a, b, "follows", [2.0, 0.0])

    def test_missing_endpoint(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        with pytest.raises(EndpointError, match="does not exist"):
            g.add_edge(a, 99, "follows", [1.0, 0.0])

    def test_in_neighbors_insertion_order(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        v = g.add_node("car", [0.0] * 3)
        a = g.add_node("car", [0.0] * 3)
        b = g.add_node("car", [0.0] * 3)
        assert in_neighbors(g, v) == []
        e1 = g.add_edge(a, v, "follows", [1.0, 0.0])
        e2 = g.add_edge(b, v, "follows", [2.0, 0.0])
        assert in_neighbors(g, v) == [(a, e1), (b, e2)]
        assert in_neighbors(g, v, "hosts") == []

    def test_in_neighbors_unknown_node(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        with pytest.raises(UnknownNodeError):
            g.in_neighbors(7)

    def test_in_neighbors_partition_edges(self, toy_graph):
        seen = [e for record in toy_graph.nodes() for _, e in toy_graph.in_neighbors(record.ref)]
        assert sorted(seen) == sorted(e.ref for e in toy_graph.edges())

    def test_stored_feature_scalars(self, toy_graph, toy_schema):
        expected = sum(toy_graph.node_count(t.name) * t.feature_dim for t in toy_schema.node_types)
        assert toy_graph.stored_feature_scalars() == expected

    def test_seal_blocks_mutation(self, toy_schema):
        g = seal(new_snapshot(toy_schema, 0))
        with pytest.raises(SealedSnapshotError):
            g.add_node("car", [0.0] * 3)
        assert seal(g) is g

    def test_reads_unchanged_by_seal(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [1.0, 2.0, 3.0])
        before = g.get_node_features(a)
        g.seal()
        assert g.get_node_features(a) == before

    def test_remove_node_drops_incident_edges(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        b = g.add_node("car", [0.0] * 3)
        g.add_edge(a, b, "follows", [1.0, 0.0])
        g.remove_node(a)
        assert g.edge_count() == 0
        assert not g.has_node(a)
        c = g.add_node("car", [0.0] * 3)
        assert c not in (a, b)

    def test_derive_continues_lineage(self, toy_graph):
        child = toy_graph.derive(4)
        assert not child.sealed
        assert child.timestamp == 4
        assert child.node_count() == toy_graph.node_count()
        ref = child.add_node("car", [0.0] * 3)
        assert ref not in [n.ref for n in toy_graph.nodes()]
        assert toy_graph.node_count() == 5

    def test_set_features(self, toy_schema):
        g = new_snapshot(toy_schema, 0)
        a = g.add_node("car", [0.0] * 3)
        g.set_node_features(a, [1.0, 1.0, 1.0])
        assert g.get_node_features(a) == (1.0, 1.0, 1.0)
        with pytest.raises(DimensionMismatchError):
            g.set_node_features(a, [1.0])


class TestGraphFile:
    """JSON graph documents."""

    def test_round_trip_is_byte_identical(self, toy_graph):
        text = dumps_graph(toy_graph)
        assert dumps_graph(loads_graph(text)) == text

    def test_round_trip_preserves_content(self, toy_graph):
        copy = loads_graph(dumps_graph(toy_graph))
        assert copy.sealed
        assert copy.timestamp == toy_graph.timestamp
        assert [(n.ref, n.kind, n.features) for n in copy.nodes()] == \
               [(n.ref, n.kind, n.features) for n in toy_graph.nodes()]
        assert [(e.src, e.dst, e.kind, e.features) for e in copy.edges()] == \
               [(e.src, e.dst, e.kind, e.features) for e in toy_graph.edges()]

    def test_file_round_trip(self, toy_graph, tmp_path):
        path = tmp_path / "graph.json"
        dump_graph(toy_graph, path)
        assert graph_to_dict(load_graph(path)) == graph_to_dict(toy_graph)

    def test_malformed_document(self):
        with pytest.raises(GraphFormatError):
            loads_graph("{not json")
        with pytest.raises(GraphFormatError):
            loads_graph(json.dumps({"schema": {"node_types": [], "edge_types": []}}))

    def test_document_with_bad_edge(self, toy_graph):
        data = graph_to_dict(toy_graph)
        data["edges"][0]["type"] = "hosts"
        with pytest.raises(GraphFormatError):
            loads_graph(json.dumps(data))

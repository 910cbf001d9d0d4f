import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from traffic_graph_sim.errors import GraphError, GraphFormatError, SchemaError
from traffic_graph_sim.graph.schema import Schema
from traffic_graph_sim.graph.snapshot import (
    EdgeRecord, EdgeRef, GraphSnapshot, NodeRecord, NodeRef, _checked_features
)

logger = logging.getLogger("traffic-graph-sim.graph")


def graph_to_dict(g: GraphSnapshot) -> Dict[str, Any]:
    """Graph-file representation; arrays follow insertion order"""
    return {
        "schema": g.schema.to_dict(),
        "timestamp": g.timestamp,
        "nodes": [
            {"id": int(n.ref), "type": n.kind, "features": list(n.features)}
            for n in g.nodes()
        ],
        "edges": [
            {
                "id": int(e.ref),
                "src": int(e.src),
                "dst": int(e.dst),
                "type": e.kind,
                "features": list(e.features),
            }
            for e in g.edges()
        ],
    }


def graph_from_dict(data: Dict[str, Any]) -> GraphSnapshot:
    """Rebuild a sealed snapshot, keeping the stored node and edge ids"""
    try:
        schema = Schema.from_dict(data["schema"])
        g = GraphSnapshot(schema, int(data["timestamp"]))
        max_node = -1
        for item in data["nodes"]:
            ref = NodeRef(int(item["id"]))
            if g.has_node(ref):
                raise GraphFormatError(f"duplicate node id {ref}")
            kind = str(item["type"])
            values = _checked_features(
                item["features"], schema.node_feature_dim(kind), f"node type '{kind}'"
            )
            g._store_node(NodeRecord(ref, kind, values))
            max_node = max(max_node, ref)
        max_edge = -1
        seen_edges = set()
        for item in data["edges"]:
            ref = EdgeRef(int(item["id"]))
            if ref in seen_edges:
                raise GraphFormatError(f"duplicate edge id {ref}")
            seen_edges.add(ref)
            src, dst = NodeRef(int(item["src"])), NodeRef(int(item["dst"]))
            kind = str(item["type"])
            g._check_endpoints(src, dst, kind)
            values = _checked_features(
                item["features"], schema.edge_feature_dim(kind), f"edge type '{kind}'"
            )
            g._store_edge(EdgeRecord(ref, src, dst, kind, values))
            max_edge = max(max_edge, ref)
        g._next_node = max_node + 1
        g._next_edge = max_edge + 1
    except (KeyError, TypeError, ValueError) as e:
        raise GraphFormatError(f"malformed graph document: {e}") from e
    except (GraphError, SchemaError) as e:
        raise GraphFormatError(f"invalid graph document: {e}") from e
    return g.seal()


def dumps_graph(g: GraphSnapshot) -> str:
    return json.dumps(graph_to_dict(g), separators=(",", ":"))


def loads_graph(text: str) -> GraphSnapshot:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"graph file is not valid JSON: {e}") from e
    return graph_from_dict(data)


def dump_graph(g: GraphSnapshot, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_graph(g), encoding="utf-8")
    logger.info(f"Graph written to {path} ({g.node_count()} nodes, {g.edge_count()} edges)")


def load_graph(path: Union[str, Path]) -> GraphSnapshot:
    return loads_graph(Path(path).read_text(encoding="utf-8"))

"""
Dynamic heterogeneous graph store.

Typed nodes and directed typed edges with per-type feature dimensions,
grouped into timestamped snapshots that are sealed once complete.
"""

from traffic_graph_sim.graph.schema import EdgeType, NodeType, Schema
from traffic_graph_sim.graph.snapshot import (
    EdgeRecord, EdgeRef, GraphSnapshot, NodeRecord, NodeRef,
    add_edge, add_node, in_neighbors, new_snapshot, seal
)
from traffic_graph_sim.graph.serialization import (
    dump_graph, dumps_graph, graph_from_dict, graph_to_dict, load_graph, loads_graph
)

__all__ = [
    "EdgeType",
    "NodeType",
    "Schema",
    "EdgeRecord",
    "EdgeRef",
    "GraphSnapshot",
    "NodeRecord",
    "NodeRef",
    "add_edge",
    "add_node",
    "in_neighbors",
    "new_snapshot",
    "seal",
    "dump_graph",
    "dumps_graph",
    "graph_from_dict",
    "graph_to_dict",
    "load_graph",
    "loads_graph",
]

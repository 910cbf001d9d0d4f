import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from traffic_graph_sim.errors import SchemaError, UnknownKindError

logger = logging.getLogger("traffic-graph-sim.graph")


@dataclass(frozen=True)
class NodeType:
    """A node kind o_i with its feature dimension D^v"""
    name: str
    feature_dim: int


@dataclass(frozen=True)
class EdgeType:
    """A directed relation kind r_i with declared endpoint kinds and dimension D^e"""
    name: str
    src_kind: str
    dst_kind: str
    feature_dim: int


@dataclass(frozen=True)
class Schema:
    """Ordered node and edge type sets of a heterogeneous graph"""
    node_types: Tuple[NodeType, ...] = field(default_factory=tuple)
    edge_types: Tuple[EdgeType, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        """Raise SchemaError listing every problem found"""
        problems: List[str] = []

        seen_nodes = set()
        for node_type in self.node_types:
            if node_type.name in seen_nodes:
                problems.append(f"duplicate node type '{node_type.name}'")
            seen_nodes.add(node_type.name)
            if node_type.feature_dim < 0:
                problems.append(f"node type '{node_type.name}' has negative feature_dim")

        seen_edges = set()
        for edge_type in self.edge_types:
            if edge_type.name in seen_edges:
                problems.append(f"duplicate edge type '{edge_type.name}'")
            seen_edges.add(edge_type.name)
            if edge_type.name in seen_nodes:
                problems.append(f"edge type '{edge_type.name}' shadows a node type")
            if edge_type.feature_dim < 0:
                problems.append(f"edge type '{edge_type.name}' has negative feature_dim")
            for endpoint in (edge_type.src_kind, edge_type.dst_kind):
                if endpoint not in seen_nodes:
                    problems.append(
                        f"edge type '{edge_type.name}' references unknown node type '{endpoint}'"
                    )

        if problems:
            logger.error(f"Schema validation failed: {problems}")
            raise SchemaError("; ".join(problems))

    @property
    def node_type_names(self) -> List[str]:
        return [t.name for t in self.node_types]

    @property
    def edge_type_names(self) -> List[str]:
        return [t.name for t in self.edge_types]

    def node_type(self, name: str) -> NodeType:
        for node_type in self.node_types:
            if node_type.name == name:
                return node_type
        raise UnknownKindError(f"unknown node type '{name}'")

    def edge_type(self, name: str) -> EdgeType:
        for edge_type in self.edge_types:
            if edge_type.name == name:
                return edge_type
        raise UnknownKindError(f"unknown edge type '{name}'")

    def node_feature_dim(self, name: str) -> int:
        return self.node_type(name).feature_dim

    def edge_feature_dim(self, name: str) -> int:
        return self.edge_type(name).feature_dim

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the graph-file schema representation"""
        return {
            "node_types": [
                {"name": t.name, "feature_dim": t.feature_dim} for t in self.node_types
            ],
            "edge_types": [
                {
                    "name": t.name,
                    "src_kind": t.src_kind,
                    "dst_kind": t.dst_kind,
                    "feature_dim": t.feature_dim,
                }
                for t in self.edge_types
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Schema":
        try:
            node_types = tuple(
                NodeType(name=str(t["name"]), feature_dim=int(t["feature_dim"]))
                for t in data["node_types"]
            )
            edge_types = tuple(
                EdgeType(
                    name=str(t["name"]),
                    src_kind=str(t["src_kind"]),
                    dst_kind=str(t["dst_kind"]),
                    feature_dim=int(t["feature_dim"]),
                )
                for t in data["edge_types"]
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed schema document: {e}") from e
        schema = cls(node_types=node_types, edge_types=edge_types)
        schema.validate()
        return schema

import math
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, NewType, Optional, Sequence, Set, Tuple

from traffic_graph_sim.errors import (
    DimensionMismatchError, EndpointError, NonFiniteFeatureError,
    SealedSnapshotError, UnknownNodeError
)
from traffic_graph_sim.graph.schema import Schema

logger = logging.getLogger("traffic-graph-sim.graph")

NodeRef = NewType("NodeRef", int)
EdgeRef = NewType("EdgeRef", int)


@dataclass(frozen=True)
class NodeRecord:
    """A stored node: its type (phi) and feature row"""
    ref: NodeRef
    kind: str
    features: Tuple[float, ...]


@dataclass(frozen=True)
class EdgeRecord:
    """A stored directed edge: endpoints, type (psi) and feature row"""
    ref: EdgeRef
    src: NodeRef
    dst: NodeRef
    kind: str
    features: Tuple[float, ...]


def _checked_features(features: Iterable[float], expected_dim: int, what: str) -> Tuple[float, ...]:
    values = tuple(float(x) for x in features)
    if len(values) != expected_dim:
        raise DimensionMismatchError(
            f"{what} expects {expected_dim} features, got {len(values)}"
        )
    for x in values:
        if not math.isfinite(x):
            raise NonFiniteFeatureError(f"{what} has non-finite feature {x}")
    return values


class GraphSnapshot:
    """
    One timestamped static graph G_n(V_n, E_n, O_n, R_n).

    Nodes and edges keep insertion order. References are integers assigned
    monotonically within a lineage (a snapshot and everything derived from
    it) and are never reused, removed ones included.
    """

    def __init__(self, schema: Schema, timestamp: int):
        if timestamp < 0:
            raise ValueError(f"timestamp must be non-negative, got {timestamp}")
        self.schema = schema
        self.timestamp = int(timestamp)
        self._sealed = False
        self._nodes: Dict[NodeRef, NodeRecord] = {}
        self._edges: Dict[EdgeRef, EdgeRecord] = {}
        self._in_edges: Dict[NodeRef, List[EdgeRef]] = {}
        self._out_edges: Dict[NodeRef, List[EdgeRef]] = {}
        self._typed_pairs: Set[Tuple[NodeRef, NodeRef, str]] = set()
        self._next_node = 0
        self._next_edge = 0

    # -- state -------------------------------------------------------------

    @property
    def sealed(self) -> bool:
        return self._sealed

    def seal(self) -> "GraphSnapshot":
        """Make the snapshot immutable; sealing twice is a no-op"""
        self._sealed = True
        return self

    def _require_unsealed(self) -> None:
        if self._sealed:
            raise SealedSnapshotError(
                f"snapshot at timestamp {self.timestamp} is sealed"
            )

    # -- mutation ----------------------------------------------------------

    def add_node(self, kind: str, features: Sequence[float]) -> NodeRef:
        """Add a node of the given kind and return its reference"""
        self._require_unsealed()
        dim = self.schema.node_feature_dim(kind)
        values = _checked_features(features, dim, f"node type '{kind}'")
        ref = NodeRef(self._next_node)
        self._next_node += 1
        self._store_node(NodeRecord(ref, kind, values))
        return ref

    def add_edge(self, src: NodeRef, dst: NodeRef, kind: str, features: Sequence[float]) -> EdgeRef:
        """Add a directed edge src -> dst of the given kind and return its reference"""
        self._require_unsealed()
        edge_type = self.schema.edge_type(kind)
        self._check_endpoints(src, dst, kind)
        values = _checked_features(features, edge_type.feature_dim, f"edge type '{kind}'")
        ref = EdgeRef(self._next_edge)
        self._next_edge += 1
        self._store_edge(EdgeRecord(ref, src, dst, kind, values))
        return ref

    def set_node_features(self, ref: NodeRef, features: Sequence[float]) -> None:
        self._require_unsealed()
        node = self.node(ref)
        values = _checked_features(
            features, self.schema.node_feature_dim(node.kind), f"node type '{node.kind}'"
        )
        self._nodes[ref] = NodeRecord(ref, node.kind, values)

    def set_edge_features(self, ref: EdgeRef, features: Sequence[float]) -> None:
        self._require_unsealed()
        edge = self.edge(ref)
        values = _checked_features(
            features, self.schema.edge_feature_dim(edge.kind), f"edge type '{edge.kind}'"
        )
        self._edges[ref] = EdgeRecord(ref, edge.src, edge.dst, edge.kind, values)

    def remove_edge(self, ref: EdgeRef) -> None:
        """Remove an edge; its reference is tombstoned"""
        self._require_unsealed()
        edge = self.edge(ref)
        del self._edges[ref]
        self._in_edges[edge.dst].remove(ref)
        self._out_edges[edge.src].remove(ref)
        self._typed_pairs.discard((edge.src, edge.dst, edge.kind))

    def remove_node(self, ref: NodeRef) -> None:
        """Remove a node together with its incident edges"""
        self._require_unsealed()
        self.node(ref)
        for edge_ref in list(self._in_edges[ref]) + list(self._out_edges[ref]):
            if edge_ref in self._edges:
                self.remove_edge(edge_ref)
        del self._nodes[ref]
        del self._in_edges[ref]
        del self._out_edges[ref]

    def _check_endpoints(self, src: NodeRef, dst: NodeRef, kind: str) -> None:
        edge_type = self.schema.edge_type(kind)
        for end in (src, dst):
            if end not in self._nodes:
                raise EndpointError(f"edge '{kind}' endpoint {end} does not exist")
        if src == dst:
            raise EndpointError(f"self-loop on node {src} rejected for edge '{kind}'")
        src_kind = self._nodes[src].kind
        dst_kind = self._nodes[dst].kind
        if src_kind != edge_type.src_kind or dst_kind != edge_type.dst_kind:
            raise EndpointError(
                f"edge '{kind}' is declared {edge_type.src_kind}->{edge_type.dst_kind}, "
                f"got {src_kind}->{dst_kind}"
            )
        if (src, dst, kind) in self._typed_pairs:
            raise EndpointError(f"parallel '{kind}' edge {src}->{dst} rejected")

    def _store_node(self, record: NodeRecord) -> None:
        self._nodes[record.ref] = record
        self._in_edges[record.ref] = []
        self._out_edges[record.ref] = []

    def _store_edge(self, record: EdgeRecord) -> None:
        self._edges[record.ref] = record
        self._in_edges[record.dst].append(record.ref)
        self._out_edges[record.src].append(record.ref)
        self._typed_pairs.add((record.src, record.dst, record.kind))

    # -- reads -------------------------------------------------------------

    def node(self, ref: NodeRef) -> NodeRecord:
        try:
            return self._nodes[ref]
        except KeyError:
            raise UnknownNodeError(f"node {ref} not in snapshot") from None

    def edge(self, ref: EdgeRef) -> EdgeRecord:
        try:
            return self._edges[ref]
        except KeyError:
            raise UnknownNodeError(f"edge {ref} not in snapshot") from None

    def has_node(self, ref: NodeRef) -> bool:
        return ref in self._nodes

    def node_kind(self, ref: NodeRef) -> str:
        return self.node(ref).kind

    def get_node_features(self, ref: NodeRef) -> Tuple[float, ...]:
        return self.node(ref).features

    def get_edge_features(self, ref: EdgeRef) -> Tuple[float, ...]:
        return self.edge(ref).features

    def edge_endpoints(self, ref: EdgeRef) -> Tuple[NodeRef, NodeRef]:
        edge = self.edge(ref)
        return edge.src, edge.dst

    def nodes(self) -> Iterator[NodeRecord]:
        return iter(self._nodes.values())

    def edges(self) -> Iterator[EdgeRecord]:
        return iter(self._edges.values())

    def nodes_of_kind(self, kind: str) -> List[NodeRef]:
        return [n.ref for n in self._nodes.values() if n.kind == kind]

    def edges_of_kind(self, kind: str) -> List[EdgeRef]:
        return [e.ref for e in self._edges.values() if e.kind == kind]

    def node_count(self, kind: Optional[str] = None) -> int:
        if kind is None:
            return len(self._nodes)
        return sum(1 for n in self._nodes.values() if n.kind == kind)

    def edge_count(self, kind: Optional[str] = None) -> int:
        if kind is None:
            return len(self._edges)
        return sum(1 for e in self._edges.values() if e.kind == kind)

    def in_neighbors(self, v: NodeRef, kind: Optional[str] = None) -> List[Tuple[NodeRef, EdgeRef]]:
        """All (u, e) with an edge u -> v, in edge insertion order"""
        if v not in self._nodes:
            raise UnknownNodeError(f"node {v} not in snapshot")
        if kind is not None:
            self.schema.edge_type(kind)
        result = []
        for edge_ref in self._in_edges[v]:
            edge = self._edges[edge_ref]
            if kind is None or edge.kind == kind:
                result.append((edge.src, edge_ref))
        return result

    def stored_feature_scalars(self) -> int:
        return sum(len(n.features) for n in self._nodes.values())

    # -- lineage -----------------------------------------------------------

    def derive(self, timestamp: int) -> "GraphSnapshot":
        """Unsealed copy at a new timestamp, continuing this lineage's reference counters"""
        child = GraphSnapshot(self.schema, timestamp)
        for record in self._nodes.values():
            child._store_node(record)
        for record in self._edges.values():
            child._store_edge(record)
        child._next_node = self._next_node
        child._next_edge = self._next_edge
        return child

    def __repr__(self) -> str:
        state = "sealed" if self._sealed else "open"
        return (f"GraphSnapshot(t={self.timestamp}, nodes={len(self._nodes)}, "
                f"edges={len(self._edges)}, {state})")


def new_snapshot(schema: Schema, timestamp: int) -> GraphSnapshot:
    """Validate the schema and return an empty unsealed snapshot"""
    schema.validate()
    logger.debug(f"New snapshot at timestamp {timestamp}")
    return GraphSnapshot(schema, timestamp)


def add_node(g: GraphSnapshot, kind: str, features: Sequence[float]) -> NodeRef:
    return g.add_node(kind, features)


def add_edge(g: GraphSnapshot, src: NodeRef, dst: NodeRef, kind: str,
             features: Sequence[float]) -> EdgeRef:
    return g.add_edge(src, dst, kind, features)


def in_neighbors(g: GraphSnapshot, v: NodeRef, kind: Optional[str] = None) -> List[Tuple[NodeRef, EdgeRef]]:
    return g.in_neighbors(v, kind)


def seal(g: GraphSnapshot) -> GraphSnapshot:
    return g.seal()

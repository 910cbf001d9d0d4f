"""
Dense tensor views of graph snapshots.

Nodes are laid out in insertion order; a collated view stacks several
snapshots as one disjoint graph.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import torch

from traffic_graph_sim.graph.schema import Schema
from traffic_graph_sim.graph.snapshot import EdgeRef, GraphSnapshot, NodeRef

DTYPE = torch.float64


@dataclass
class GraphTensors:
    schema: Schema
    num_nodes: int
    node_refs: List[NodeRef]
    positions: Dict[str, torch.Tensor]
    features: Dict[str, torch.Tensor]
    edge_index: Dict[str, Tuple[torch.Tensor, torch.Tensor]]
    edge_features: Dict[str, torch.Tensor]
    edge_refs: Dict[str, List[EdgeRef]] = field(default_factory=dict)
    offsets: List[int] = field(default_factory=lambda: [0])

    @classmethod
    def from_snapshot(cls, g: GraphSnapshot) -> "GraphTensors":
        schema = g.schema
        node_refs: List[NodeRef] = []
        index: Dict[NodeRef, int] = {}
        by_kind: Dict[str, List[int]] = {name: [] for name in schema.node_type_names}
        rows: Dict[str, List[Tuple[float, ...]]] = {name: [] for name in schema.node_type_names}
        for record in g.nodes():
            index[record.ref] = len(node_refs)
            by_kind[record.kind].append(len(node_refs))
            rows[record.kind].append(record.features)
            node_refs.append(record.ref)

        src: Dict[str, List[int]] = {name: [] for name in schema.edge_type_names}
        dst: Dict[str, List[int]] = {name: [] for name in schema.edge_type_names}
        edge_rows: Dict[str, List[Tuple[float, ...]]] = {name: [] for name in schema.edge_type_names}
        edge_refs: Dict[str, List[EdgeRef]] = {name: [] for name in schema.edge_type_names}
        for record in g.edges():
            src[record.kind].append(index[record.src])
            dst[record.kind].append(index[record.dst])
            edge_rows[record.kind].append(record.features)
            edge_refs[record.kind].append(record.ref)

        return cls(
            schema=schema,
            num_nodes=len(node_refs),
            node_refs=node_refs,
            positions={k: torch.tensor(v, dtype=torch.long) for k, v in by_kind.items()},
            features={k: _matrix(rows[k], schema.node_feature_dim(k)) for k in rows},
            edge_index={k: (torch.tensor(src[k], dtype=torch.long), torch.tensor(dst[k], dtype=torch.long))
                        for k in src},
            edge_features={k: _matrix(edge_rows[k], schema.edge_feature_dim(k)) for k in edge_rows},
            edge_refs=edge_refs,
        )

    def index_of(self) -> Dict[NodeRef, int]:
        """Row of each node; only meaningful for a single snapshot"""
        return {ref: row for row, ref in enumerate(self.node_refs)}


def _matrix(rows: Sequence[Tuple[float, ...]], width: int) -> torch.Tensor:
    if not rows:
        return torch.zeros((0, width), dtype=DTYPE)
    return torch.tensor(rows, dtype=DTYPE).reshape(len(rows), width)


def collate(parts: Sequence[GraphTensors]) -> GraphTensors:
    """Disjoint union; offsets record where each part's nodes start"""
    if not parts:
        raise ValueError("cannot collate zero graphs")
    schema = parts[0].schema
    offsets: List[int] = []
    shift = 0
    node_refs: List[NodeRef] = []
    for part in parts:
        offsets.append(shift)
        node_refs.extend(part.node_refs)
        shift += part.num_nodes

    positions = {}
    features = {}
    for kind in schema.node_type_names:
        positions[kind] = torch.cat([p.positions[kind] + o for p, o in zip(parts, offsets)])
        features[kind] = torch.cat([p.features[kind] for p in parts])
    edge_index = {}
    edge_features = {}
    for kind in schema.edge_type_names:
        edge_index[kind] = (
            torch.cat([p.edge_index[kind][0] + o for p, o in zip(parts, offsets)]),
            torch.cat([p.edge_index[kind][1] + o for p, o in zip(parts, offsets)]),
        )
        edge_features[kind] = torch.cat([p.edge_features[kind] for p in parts])
    return GraphTensors(
        schema=schema,
        num_nodes=shift,
        node_refs=node_refs,
        positions=positions,
        features=features,
        edge_index=edge_index,
        edge_features=edge_features,
        offsets=offsets,
    )

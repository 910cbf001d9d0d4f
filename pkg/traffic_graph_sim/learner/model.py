import math
from typing import Dict, Mapping, Optional, Tuple, Union

import torch
from torch import nn

from traffic_graph_sim.errors import ModelError, ShapeMismatchError
from traffic_graph_sim.graph.schema import Schema
from traffic_graph_sim.graph.snapshot import GraphSnapshot, NodeRef
from traffic_graph_sim.learner.config import ModelConfig
from traffic_graph_sim.learner.layers import HgtLayer
from traffic_graph_sim.learner.tensors import DTYPE, GraphTensors

PRIOR_PARAMETER = ".relation_pri."


class HeteroGraphTransformer(nn.Module):
    """
    Per-type input projections, a stack of HGT layers and a linear readout
    applied to the readout node kind.
    """

    def __init__(self, schema: Schema, config: ModelConfig, seed: Optional[int] = None):
        super().__init__()
        if config.readout_kind not in schema.node_type_names:
            raise ModelError(f"readout kind '{config.readout_kind}' is not a node type of the schema")
        width = schema.node_feature_dim(config.readout_kind)
        if config.residual_feature is not None and not 0 <= config.residual_feature < width:
            raise ModelError(f"residual feature {config.residual_feature} is outside the {width} "
                             f"'{config.readout_kind}' features")
        self.schema = schema
        self.config = config
        self.input_proj = nn.ModuleDict({
            node_type.name: nn.Linear(node_type.feature_dim, config.hidden, dtype=DTYPE)
            for node_type in schema.node_types
        })
        self.layers = nn.ModuleList([HgtLayer(schema, config.hidden, config.heads) for _ in range(config.layers)])
        self.readout = nn.Linear(config.hidden, config.output_dim, dtype=DTYPE)
        self.reset_parameters(config.seed if seed is None else seed)

    def reset_parameters(self, seed: int) -> None:
        """Uniform(-1/sqrt(d), 1/sqrt(d)) from a seeded generator; priors start at 1"""
        generator = torch.Generator().manual_seed(seed)
        bound = 1.0 / math.sqrt(self.config.hidden)
        with torch.no_grad():
            for name, parameter in self.named_parameters():
                if PRIOR_PARAMETER in name:
                    parameter.fill_(1.0)
                else:
                    parameter.uniform_(-bound, bound, generator=generator)

    def embed(self, graph: GraphTensors) -> torch.Tensor:
        """Final-layer representation of every node, rows in graph order"""
        h = torch.zeros((graph.num_nodes, self.config.hidden), dtype=DTYPE)
        for kind, pos in graph.positions.items():
            if pos.numel():
                h = h.index_copy(0, pos, self.input_proj[kind](graph.features[kind]))
        for layer in self.layers:
            h = layer(graph, h)
        return h

    def skip(self, graph: GraphTensors) -> torch.Tensor:
        """Residual input per node: the `residual_feature` column of readout-kind nodes, 0 elsewhere"""
        skip = torch.zeros(graph.num_nodes, dtype=DTYPE)
        kind = self.config.readout_kind
        if self.config.residual_feature is not None and graph.positions[kind].numel():
            skip = skip.index_copy(0, graph.positions[kind], graph.features[kind][:, self.config.residual_feature])
        return skip

    def forward(self, graph: GraphTensors, rows: Optional[torch.Tensor] = None) -> torch.Tensor:
        """
        Readout predictions for `rows` (default: every readout-kind node).
        With a `residual_feature`, output column 0 is that input feature plus
        the learned correction.
        """
        if rows is None:
            rows = graph.positions[self.config.readout_kind]
        out = self.readout(self.embed(graph)[rows])
        if self.config.residual_feature is None:
            return out
        return torch.cat([out[:, :1] + self.skip(graph)[rows].unsqueeze(1), out[:, 1:]], dim=1)


# name used for a trained parameter set
ModelParams = HeteroGraphTransformer


def check_graph(model: HeteroGraphTransformer, g: GraphSnapshot) -> None:
    if not g.sealed:
        raise ModelError("model input graph must be sealed")
    if g.schema != model.schema:
        raise ModelError("graph schema does not match the model schema")


def model_forward(m: HeteroGraphTransformer, g: GraphSnapshot) -> Dict[NodeRef, Tuple[float, ...]]:
    """Prediction vector for every readout-kind node of `g`"""
    check_graph(m, g)
    graph = GraphTensors.from_snapshot(g)
    rows = graph.positions[m.config.readout_kind]
    if rows.numel() == 0:
        return {}
    with torch.no_grad():
        out = m(graph, rows)
    return {graph.node_refs[row]: tuple(values) for row, values in zip(rows.tolist(), out.tolist())}


def layer_forward(layer: HgtLayer, g: GraphSnapshot,
                  h_prev: Union[torch.Tensor, Mapping[NodeRef, torch.Tensor]]) -> torch.Tensor:
    """One layer over `g`; rows of `h_prev` and of the result follow node insertion order"""
    graph = GraphTensors.from_snapshot(g)
    if isinstance(h_prev, Mapping):
        missing = [ref for ref in graph.node_refs if ref not in h_prev]
        if missing:
            raise ShapeMismatchError(f"hidden state missing for nodes {missing[:5]}")
        h_prev = torch.stack([torch.as_tensor(h_prev[ref], dtype=DTYPE) for ref in graph.node_refs]) \
            if graph.node_refs else torch.zeros((0, layer.hidden), dtype=DTYPE)
    return layer(graph, h_prev)

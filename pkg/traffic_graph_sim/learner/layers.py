"""
Heterogeneous graph transformer layer.

For a target node v with in-neighbours u over edge e, per head:

    score(u, e, v) = (K(u) W_att[e]) . Q(v) * mu[e] / sqrt(d/h)
    att            = softmax of score over all in-edges of v
    H~[v]          = sum att * (V(u) W_msg[e])
    H[v]           = A_Linear[type(v)](GELU(H~[v])) + H_prev[v]

K, Q, V and A_Linear are per node type; W_att, W_msg and mu per edge type.
Edge features are projected to width d and added to keys and messages.
"""

import math
from typing import Dict

import torch
import torch.nn.functional as F
from torch import nn

from traffic_graph_sim.errors import DivergenceError, ShapeMismatchError
from traffic_graph_sim.graph.schema import Schema
from traffic_graph_sim.learner.tensors import DTYPE, GraphTensors


class HgtLayer(nn.Module):
    def __init__(self, schema: Schema, hidden: int, heads: int):
        super().__init__()
        if hidden % heads != 0:
            raise ShapeMismatchError(f"hidden width {hidden} is not divisible by {heads} heads")
        self.hidden = hidden
        self.heads = heads
        self.d_k = hidden // heads
        self.sqrt_dk = math.sqrt(self.d_k)

        node_kinds = schema.node_type_names
        self.k_linears = nn.ModuleDict({k: nn.Linear(hidden, hidden, bias=False, dtype=DTYPE) for k in node_kinds})
        self.q_linears = nn.ModuleDict({k: nn.Linear(hidden, hidden, bias=False, dtype=DTYPE) for k in node_kinds})
        self.v_linears = nn.ModuleDict({k: nn.Linear(hidden, hidden, bias=False, dtype=DTYPE) for k in node_kinds})
        self.a_linears = nn.ModuleDict({k: nn.Linear(hidden, hidden, dtype=DTYPE) for k in node_kinds})

        self.relation_att = nn.ParameterDict()
        self.relation_msg = nn.ParameterDict()
        self.relation_pri = nn.ParameterDict()
        self.edge_linears = nn.ModuleDict()
        for edge_type in schema.edge_types:
            name = edge_type.name
            self.relation_att[name] = nn.Parameter(torch.empty(heads, self.d_k, self.d_k, dtype=DTYPE))
            self.relation_msg[name] = nn.Parameter(torch.empty(heads, self.d_k, self.d_k, dtype=DTYPE))
            self.relation_pri[name] = nn.Parameter(torch.ones((), dtype=DTYPE))
            if edge_type.feature_dim > 0:
                self.edge_linears[name] = nn.Linear(edge_type.feature_dim, hidden, bias=False, dtype=DTYPE)

    def _project(self, linears: nn.ModuleDict, graph: GraphTensors, h: torch.Tensor) -> torch.Tensor:
        out = h.new_zeros(h.shape)
        for kind, pos in graph.positions.items():
            if pos.numel():
                out = out.index_copy(0, pos, linears[kind](h[pos]))
        return out

    def _edge_terms(self, graph: GraphTensors, h: torch.Tensor):
        """Scores (E, heads), messages (E, heads, d_k) and targets (E,) over all edge kinds"""
        k = self._project(self.k_linears, graph, h)
        q = self._project(self.q_linears, graph, h)
        v = self._project(self.v_linears, graph, h)
        scores, messages, targets, kinds = [], [], [], []
        for kind, (src, dst) in graph.edge_index.items():
            if src.numel() == 0:
                continue
            keys = k[src]
            values = v[src]
            if kind in self.edge_linears:
                projected = self.edge_linears[kind](graph.edge_features[kind])
                keys = keys + projected
                values = values + projected
            keys = keys.view(-1, self.heads, self.d_k)
            values = values.view(-1, self.heads, self.d_k)
            queries = q[dst].view(-1, self.heads, self.d_k)
            keys = torch.einsum("ehi,hij->ehj", keys, self.relation_att[kind])
            scores.append((keys * queries).sum(dim=-1) * self.relation_pri[kind] / self.sqrt_dk)
            messages.append(torch.einsum("ehi,hij->ehj", values, self.relation_msg[kind]))
            targets.append(dst)
            kinds.append((kind, src.numel()))
        return scores, messages, targets, kinds

    def _softmax(self, scores: torch.Tensor, targets: torch.Tensor, num_nodes: int) -> torch.Tensor:
        index = targets.unsqueeze(-1).expand_as(scores)
        with torch.no_grad():
            peak = scores.new_full((num_nodes, self.heads), -math.inf)
            peak = peak.scatter_reduce(0, index, scores, reduce="amax", include_self=True)
        weights = torch.exp(scores - peak[targets])
        total = scores.new_zeros((num_nodes, self.heads)).index_add(0, targets, weights)
        return weights / total[targets]

    def attention(self, graph: GraphTensors, h: torch.Tensor) -> Dict[str, torch.Tensor]:
        """Attention weights (E_kind, heads) per edge kind, in edge insertion order"""
        scores, _, targets, kinds = self._edge_terms(graph, h)
        if not scores:
            return {}
        weights = self._softmax(torch.cat(scores), torch.cat(targets), graph.num_nodes)
        return dict(zip([k for k, _ in kinds], torch.split(weights, [n for _, n in kinds])))

    def forward(self, graph: GraphTensors, h: torch.Tensor) -> torch.Tensor:
        if h.shape != (graph.num_nodes, self.hidden):
            raise ShapeMismatchError(f"expected hidden states of shape {(graph.num_nodes, self.hidden)}, "
                                     f"got {tuple(h.shape)}")
        scores, messages, targets, _ = self._edge_terms(graph, h)
        aggregated = h.new_zeros((graph.num_nodes, self.heads, self.d_k))
        if scores:
            targets = torch.cat(targets)
            weights = self._softmax(torch.cat(scores), targets, graph.num_nodes)
            aggregated = aggregated.index_add(0, targets, weights.unsqueeze(-1) * torch.cat(messages))
        activated = F.gelu(aggregated.reshape(graph.num_nodes, self.hidden))
        out = self._project(self.a_linears, graph, activated) + h
        if not torch.isfinite(out).all():
            raise DivergenceError("non-finite hidden state in graph transformer layer")
        return out

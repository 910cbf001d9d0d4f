"""
Supervised training of the graph transformer on (snapshot, next-speed) batches.
"""

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import torch

from traffic_graph_sim.errors import DatasetError, DivergenceError, ModelError
from traffic_graph_sim.graph.snapshot import GraphSnapshot, NodeRef
from traffic_graph_sim.learner.config import ModelConfig, OptimizerType
from traffic_graph_sim.learner.model import HeteroGraphTransformer, check_graph
from traffic_graph_sim.learner.tensors import DTYPE, GraphTensors, collate

logger = logging.getLogger("traffic-graph-sim.learner")

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass
class Batch:
    """A sealed snapshot with target vectors on readout nodes; masked nodes are left out of the loss"""
    graph: GraphSnapshot
    targets: Dict[NodeRef, Tuple[float, ...]]
    mask: FrozenSet[NodeRef] = field(default_factory=frozenset)

    def validate(self, readout_kind: str) -> None:
        widths = set()
        for ref, target in self.targets.items():
            if not self.graph.has_node(ref):
                raise DatasetError(f"target on missing node {ref}")
            if self.graph.node_kind(ref) != readout_kind:
                raise DatasetError(f"target on node {ref} of kind '{self.graph.node_kind(ref)}', "
                                   f"expected '{readout_kind}'")
            widths.add(len(target))
        if len(widths) > 1:
            raise DatasetError(f"targets of mixed widths {sorted(widths)}")
        for ref in self.mask:
            if not self.graph.has_node(ref):
                raise DatasetError(f"mask names missing node {ref}")

    def loss_nodes(self) -> List[NodeRef]:
        """Targeted, unmasked nodes in insertion order"""
        return [record.ref for record in self.graph.nodes()
                if record.ref in self.targets and record.ref not in self.mask]


def mse_loss(pred: Mapping[NodeRef, Sequence[float]], batch: Batch) -> float:
    """Mean squared difference over unmasked (node, component) pairs"""
    nodes = batch.loss_nodes()
    if not nodes:
        raise DatasetError("no unmasked targets to score")
    missing = [ref for ref in nodes if ref not in pred]
    if missing:
        raise ModelError(f"no prediction for target nodes {missing[:5]}")
    predicted = np.array([pred[ref] for ref in nodes], dtype=np.float64)
    expected = np.array([batch.targets[ref] for ref in nodes], dtype=np.float64)
    if predicted.shape != expected.shape:
        raise ModelError(f"prediction shape {predicted.shape} does not match targets {expected.shape}")
    return float(np.mean((predicted - expected) ** 2))


@dataclass
class PreparedData:
    """Collated dataset: one disjoint graph with the loss rows and their targets"""
    graph: GraphTensors
    rows: torch.Tensor
    targets: torch.Tensor


def prepare(dataset: Sequence[Batch], model: HeteroGraphTransformer) -> PreparedData:
    if not dataset:
        raise DatasetError("training dataset is empty")
    parts = []
    rows: List[int] = []
    targets: List[Tuple[float, ...]] = []
    shift = 0
    for batch in dataset:
        check_graph(model, batch.graph)
        batch.validate(model.config.readout_kind)
        part = GraphTensors.from_snapshot(batch.graph)
        index = part.index_of()
        for ref in batch.loss_nodes():
            target = batch.targets[ref]
            if len(target) != model.config.output_dim:
                raise DatasetError(f"target width {len(target)} differs from output width {model.config.output_dim}")
            rows.append(shift + index[ref])
            targets.append(tuple(target))
        parts.append(part)
        shift += part.num_nodes
    if not rows:
        raise DatasetError("dataset has no unmasked targets")
    return PreparedData(
        graph=collate(parts),
        rows=torch.tensor(rows, dtype=torch.long),
        targets=torch.tensor(targets, dtype=DTYPE),
    )


def batch_loss(model: HeteroGraphTransformer, data: PreparedData, loss_scale: float = 1.0) -> torch.Tensor:
    pred = model(data.graph, data.rows)
    return loss_scale * torch.mean((pred - data.targets) ** 2)


def make_optimizer(model: HeteroGraphTransformer, config: ModelConfig) -> torch.optim.Optimizer:
    params = model.parameters()
    if config.optimizer == OptimizerType.SGD:
        return torch.optim.SGD(params, lr=config.learning_rate)
    if config.optimizer == OptimizerType.RMSPROP:
        return torch.optim.RMSprop(params, lr=config.learning_rate, eps=ADAM_EPS)
    return torch.optim.Adam(params, lr=config.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS)


def train(dataset: Sequence[Batch], config: ModelConfig,
          init: Optional[HeteroGraphTransformer] = None) -> Tuple[HeteroGraphTransformer, List[float]]:
    """
    Full-batch training. Starts from a seeded initialization, or from a
    copy of `init` when fine-tuning. Returns the model and one loss value
    per epoch, measured before that epoch's update.
    """
    if not dataset:
        raise DatasetError("training dataset is empty")
    if init is not None:
        model = copy.deepcopy(init)
        logger.info(f"Fine-tuning existing model ({config.epochs} epochs, {config.optimizer.value})")
    else:
        model = HeteroGraphTransformer(dataset[0].graph.schema, config)
    data = prepare(dataset, model)
    optimizer = make_optimizer(model, config)
    logger.info(f"Training on {len(dataset)} snapshots, {data.rows.numel()} targets, "
                f"{sum(p.numel() for p in model.parameters())} parameters")

    curve: List[float] = []
    for epoch in range(config.epochs):
        optimizer.zero_grad()
        loss = batch_loss(model, data)
        value = loss.item()
        if not math.isfinite(value):
            raise DivergenceError(f"non-finite loss {value} at epoch {epoch}")
        loss.backward()
        optimizer.step()
        curve.append(value)
        if epoch % config.log_every == 0 or epoch == config.epochs - 1:
            logger.info(f"Epoch {epoch}: loss {value:.6g}")
    return model, curve

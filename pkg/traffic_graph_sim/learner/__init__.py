"""
Heterogeneous graph transformer learner.

Typed attention and message passing over graph snapshots, a speed readout,
MSE training with Adam/SGD/RMSProp and finite-difference gradient checks.
"""

from traffic_graph_sim.learner.config import ModelConfig, OptimizerType
from traffic_graph_sim.learner.tensors import GraphTensors, collate
from traffic_graph_sim.learner.layers import HgtLayer
from traffic_graph_sim.learner.model import HeteroGraphTransformer, ModelParams, layer_forward, model_forward
from traffic_graph_sim.learner.training import Batch, mse_loss, train
from traffic_graph_sim.learner.gradcheck import analytic_gradients, grad_check
from traffic_graph_sim.learner.serialization import (
    dumps_model, load_model, loads_model, model_from_dict, model_to_dict, save_model
)

__all__ = [
    "ModelConfig",
    "OptimizerType",
    "GraphTensors",
    "collate",
    "HgtLayer",
    "HeteroGraphTransformer",
    "ModelParams",
    "layer_forward",
    "model_forward",
    "Batch",
    "mse_loss",
    "train",
    "analytic_gradients",
    "grad_check",
    "dumps_model",
    "load_model",
    "loads_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
]

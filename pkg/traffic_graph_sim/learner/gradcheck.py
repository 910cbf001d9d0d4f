"""
Central finite-difference check of the analytic gradients.
"""

import logging
from typing import Dict, List, Tuple

import numpy as np
import torch

from traffic_graph_sim.errors import ModelError
from traffic_graph_sim.learner.model import HeteroGraphTransformer
from traffic_graph_sim.learner.training import Batch, batch_loss, prepare

logger = logging.getLogger("traffic-graph-sim.learner")

FD_STEP = 1e-5
# below this magnitude the error is measured in absolute terms
GRAD_FLOOR = 1e-5


def analytic_gradients(model: HeteroGraphTransformer, batch: Batch,
                       loss_scale: float = 1.0) -> Dict[str, torch.Tensor]:
    data = prepare([batch], model)
    model.zero_grad()
    batch_loss(model, data, loss_scale).backward()
    grads = {name: p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
             for name, p in model.named_parameters()}
    model.zero_grad()
    return grads


def grad_check(m: HeteroGraphTransformer, batch: Batch, n_probes: int,
               step: float = FD_STEP, seed: int = 0, loss_scale: float = 1.0) -> float:
    """
    Max error |analytic - numeric| / max(|analytic|, |numeric|, GRAD_FLOOR)
    over `n_probes` scalar parameters drawn uniformly from the whole model.
    Gradients below GRAD_FLOOR, exact zeros included, are compared in
    absolute terms.
    """
    if n_probes < 1:
        raise ModelError(f"n_probes must be at least 1, got {n_probes}")
    data = prepare([batch], m)
    grads = analytic_gradients(m, batch, loss_scale)
    params = dict(m.named_parameters())

    pool: List[Tuple[str, int]] = [(name, i) for name, grad in grads.items() for i in range(grad.numel())]
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pool), size=min(n_probes, len(pool)), replace=False)

    worst = 0.0
    with torch.no_grad():
        for pick in picks:
            name, i = pool[int(pick)]
            flat = params[name].view(-1)
            original = flat[i].item()
            flat[i] = original + step
            plus = batch_loss(m, data, loss_scale).item()
            flat[i] = original - step
            minus = batch_loss(m, data, loss_scale).item()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * step)
            analytic = grads[name].reshape(-1)[i].item()
            error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), GRAD_FLOOR)
            logger.debug(f"{name}[{i}]: analytic {analytic:.6e}, numeric {numeric:.6e}, rel {error:.2e}")
            worst = max(worst, error)
    return worst

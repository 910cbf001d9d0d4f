import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import torch
from pydantic import ValidationError

from traffic_graph_sim.errors import GraphFormatError, SchemaError
from traffic_graph_sim.graph.schema import Schema
from traffic_graph_sim.learner.config import ModelConfig
from traffic_graph_sim.learner.model import HeteroGraphTransformer
from traffic_graph_sim.learner.tensors import DTYPE

logger = logging.getLogger("traffic-graph-sim.learner")

MODEL_FORMAT = "traffic-graph-sim/hgt-model"


def model_to_dict(m: HeteroGraphTransformer) -> Dict[str, Any]:
    """Config, schema and flat row-major values of every named parameter"""
    return {
        "format": MODEL_FORMAT,
        "config": m.config.model_dump(mode="json"),
        "schema": m.schema.to_dict(),
        "parameters": {
            name: {"shape": list(p.shape), "values": p.detach().reshape(-1).tolist()}
            for name, p in m.named_parameters()
        },
    }


def model_from_dict(data: Dict[str, Any]) -> HeteroGraphTransformer:
    try:
        if data.get("format") != MODEL_FORMAT:
            raise GraphFormatError(f"not a model file (format {data.get('format')!r})")
        config = ModelConfig.model_validate(data["config"])
        schema = Schema.from_dict(data["schema"])
        model = HeteroGraphTransformer(schema, config)
        stored = data["parameters"]
        expected = dict(model.named_parameters())
        if set(stored) != set(expected):
            missing = sorted(set(expected) - set(stored))
            extra = sorted(set(stored) - set(expected))
            raise GraphFormatError(f"model parameters do not match (missing {missing[:3]}, extra {extra[:3]})")
        with torch.no_grad():
            for name, parameter in expected.items():
                shape = tuple(stored[name]["shape"])
                if shape != tuple(parameter.shape):
                    raise GraphFormatError(f"parameter '{name}' has shape {shape}, expected {tuple(parameter.shape)}")
                values = torch.tensor(stored[name]["values"], dtype=DTYPE)
                parameter.copy_(values.reshape(shape))
    except (KeyError, TypeError, ValueError, RuntimeError) as e:
        raise GraphFormatError(f"malformed model document: {e}") from e
    except (ValidationError, SchemaError) as e:
        raise GraphFormatError(f"invalid model document: {e}") from e
    return model


def dumps_model(m: HeteroGraphTransformer) -> str:
    return json.dumps(model_to_dict(m), separators=(",", ":"))


def loads_model(text: str) -> HeteroGraphTransformer:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"model file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise GraphFormatError("model file must hold a JSON object")
    return model_from_dict(data)


def save_model(m: HeteroGraphTransformer, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_model(m), encoding="utf-8")
    logger.info(f"Model written to {path}")


def load_model(path: Union[str, Path]) -> HeteroGraphTransformer:
    model = loads_model(Path(path).read_text(encoding="utf-8"))
    logger.info(f"Model loaded from {path} ({model.config.layers} layers, width {model.config.hidden})")
    return model

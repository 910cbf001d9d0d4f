from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_LAYERS = 2
DEFAULT_HEADS = 2
DEFAULT_HIDDEN = 32
DEFAULT_LEARNING_RATE = 1e-2
DEFAULT_EPOCHS = 200
DEFAULT_SEED = 0


class OptimizerType(str, Enum):
    ADAM = "adam"
    SGD = "sgd"
    RMSPROP = "rmsprop"


class ModelConfig(BaseModel):
    """
    Hyper-parameters of the heterogeneous graph transformer.

    Input projection widths come from the graph schema the model is built
    for; `readout_kind` names the node type whose representations are
    mapped to `output_dim` predictions. `residual_feature` names the input
    feature of that node type added to the first prediction (the current
    normalized speed for cars); None turns the skip off.
    """
    model_config = ConfigDict(extra="forbid")

    layers: int = Field(DEFAULT_LAYERS, ge=1)
    heads: int = Field(DEFAULT_HEADS, ge=1)
    hidden: int = Field(DEFAULT_HIDDEN, ge=1)
    readout_kind: str = "car"
    output_dim: int = Field(1, ge=1)
    residual_feature: Optional[int] = 0
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, ge=0)
    epochs: int = Field(DEFAULT_EPOCHS, ge=0)
    seed: int = DEFAULT_SEED
    optimizer: OptimizerType = OptimizerType.ADAM
    log_every: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _check_heads(self) -> "ModelConfig":
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden width {self.hidden} is not divisible by {self.heads} heads")
        return self

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

from .model import (
    CellParams,
    Model,
    SeqSample,
    cross_entropy,
    forward,
    forward_batch,
    init_model,
    model_from_architecture,
    predict,
    softmax,
)
from .backprop import backward, backward_batch
from .optim import AdamState, TrainConfig, adam_step, init_adam_state, train
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AdamState",
    "CellParams",
    "Model",
    "SeqSample",
    "TrainConfig",
    "adam_step",
    "backward",
    "backward_batch",
    "cross_entropy",
    "forward",
    "forward_batch",
    "grad_check",
    "init_adam_state",
    "init_model",
    "load_checkpoint",
    "model_from_architecture",
    "predict",
    "save_checkpoint",
    "softmax",
    "train",
]

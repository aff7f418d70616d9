"""Desk-scale convolutional classifier: model, optimizer, training, checkpoints."""

from .checkpoint import load_model, model_from_bytes, model_to_bytes, save_model
from .model import (
    BCE_EPSILON,
    DEFAULT_STEM,
    ConvSpec,
    ModelConfig,
    TrainedModel,
    backward,
    bce_loss,
    forward,
    forward_logits,
    init_parameters,
    loss_and_gradient,
    param_views,
)
from .optim import AdamState, TrainingConfig, adam_step
from .training import load_split_inputs, predict_scores, train

__all__ = [
    "BCE_EPSILON",
    "DEFAULT_STEM",
    "AdamState",
    "ConvSpec",
    "ModelConfig",
    "TrainedModel",
    "TrainingConfig",
    "adam_step",
    "backward",
    "bce_loss",
    "forward",
    "forward_logits",
    "init_parameters",
    "load_model",
    "load_split_inputs",
    "loss_and_gradient",
    "model_from_bytes",
    "model_to_bytes",
    "param_views",
    "predict_scores",
    "save_model",
    "train",
]

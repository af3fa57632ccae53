"""Self-contained convolutional network: layers, training, checkpoints."""

from .layers import Conv2D, Dense, Layer, MaxPool2D, ReLU, Residual, Softmax
from .network import (
    Network,
    build_network,
    gradient_check,
    load_checkpoint,
    parse_architecture,
    predict,
    preset_architecture,
    save_checkpoint,
    stack_architecture,
)
from .training import (
    Adam,
    History,
    LabeledTensors,
    SGD,
    TrainConfig,
    evaluate_network,
    train,
)

__all__ = [
    "Adam",
    "Conv2D",
    "Dense",
    "History",
    "LabeledTensors",
    "Layer",
    "MaxPool2D",
    "Network",
    "ReLU",
    "Residual",
    "SGD",
    "Softmax",
    "TrainConfig",
    "build_network",
    "evaluate_network",
    "gradient_check",
    "load_checkpoint",
    "parse_architecture",
    "predict",
    "preset_architecture",
    "save_checkpoint",
    "stack_architecture",
    "train",
]

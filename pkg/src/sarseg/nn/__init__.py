"""Numpy autodiff, layers and optimizer used by the model zoo."""

from . import functional
from .autodiff import Node, Param, backward, grad_enabled, no_grad
from .layers import (BatchNorm2d, Conv2d, ConvBN, ConvTranspose2d, Module,
                     SeparableConvBN, Sequential)
from .optim import Adam

__all__ = [
    "functional", "Node", "Param", "backward", "grad_enabled", "no_grad",
    "BatchNorm2d", "Conv2d", "ConvBN", "ConvTranspose2d", "Module",
    "SeparableConvBN", "Sequential", "Adam",
]

"""Minimal reverse-mode autodiff over float64 numpy arrays."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradcheckResult, gradcheck, relative_error
from .nn import MLP, Conv2d, Linear, Module, kaiming_uniform
from .optim import Adam, AdamState
from .tensor import (
    Parameter,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    conv2d,
    exp,
    gather,
    l1_norm,
    l2_norm,
    linear,
    matmul,
    max_over_set,
    mean,
    mul,
    negate,
    relu,
    reshape,
    scalar_mul,
    softmax,
    sub,
    sum,
    transpose,
)

__all__ = [
    "Adam", "AdamState", "Conv2d", "GradcheckResult", "gradcheck", "relative_error", "Linear", "MLP", "Module", "Parameter", "Tensor",
    "add", "as_tensor", "backward", "concat", "conv2d", "exp", "gather", "kaiming_uniform",
    "l1_norm", "l2_norm", "linear", "load_checkpoint", "matmul", "max_over_set", "mean", "mul",
    "negate", "relu", "reshape", "save_checkpoint", "scalar_mul", "softmax", "sub", "sum",
    "transpose",
]

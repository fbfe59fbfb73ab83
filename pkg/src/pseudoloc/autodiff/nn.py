"""Layer containers on top of the tensor ops."""

import numpy as np

from ..errors import RejectedInputError
from . import tensor as T
from .tensor import Parameter


def kaiming_uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Collects Parameters and child Modules from attributes, in assignment order.

    A parameter's ``name`` is set to its dotted attribute path when it is
    first enumerated, so optimizer state and checkpoints share one key space.
    """

    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                value.name = full
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")
                    elif isinstance(item, Parameter):
                        item.name = f"{full}.{i}"
                        yield item.name, item

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def num_parameters(self):
        return int(sum(p.data.size for p in self.parameters()))

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state):
        own = dict(self.named_parameters())
        missing = own.keys() - state.keys()
        unexpected = state.keys() - own.keys()
        if missing or unexpected:
            raise RejectedInputError(
                f"state mismatch: missing {sorted(missing)[:5]}, unexpected {sorted(unexpected)[:5]}"
            )
        for name, p in own.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise RejectedInputError(f"{name}: shape {arr.shape} != {p.shape}")
            p.data[...] = arr


class Linear(Module):
    """``x @ W + b`` over the last axis of ``x``."""

    def __init__(self, rng, n_in, n_out):
        self.weight = Parameter(kaiming_uniform(rng, (n_in, n_out), n_in))
        self.bias = Parameter(np.zeros(n_out))

    def __call__(self, x, relu=False):
        return T.linear(x, self.weight, self.bias, relu=relu)


class MLP(Module):
    """Stack of Linear layers with ReLU after each one (after the last only if ``final_relu``)."""

    def __init__(self, rng, n_in, widths, final_relu=True):
        self.layers = []
        for w in widths:
            self.layers.append(Linear(rng, n_in, w))
            n_in = w
        self.final_relu = final_relu
        self.out_dim = n_in

    def __call__(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x, relu=i + 1 < len(self.layers) or self.final_relu)
        return x


class Conv2d(Module):
    def __init__(self, rng, c_in, c_out, kernel_size=3, stride=2, padding=1):
        fan_in = c_in * kernel_size * kernel_size
        self.weight = Parameter(kaiming_uniform(rng, (c_out, c_in, kernel_size, kernel_size), fan_in))
        self.bias = Parameter(np.zeros((1, c_out, 1, 1)))
        self.stride = stride
        self.padding = padding

    def __call__(self, x):
        return T.conv2d(x, self.weight, self.stride, self.padding) + self.bias

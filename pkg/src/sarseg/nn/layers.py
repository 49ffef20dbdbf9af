"""Layer objects: parameter containers composing the functional ops.

Modules are plain attribute trees; ``named_params``/``named_buffers`` walk
the tree in attribute order, which fixes both the state-dict naming and the
weight-initialization order (builds are reproducible given the init rng).
"""

import numpy as np

from . import functional as F
from .autodiff import Param


class Module:
    def _children(self):
        for name, value in vars(self).items():
            yield name, value

    def named_params(self, prefix=""):
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Param):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_params(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_params(f"{full}.{i}.")

    def named_buffers(self, prefix=""):
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Module):
                yield from value.named_buffers(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{full}.{i}.")
            elif isinstance(value, _Buffer):
                yield full, value

    def params(self):
        for _, p in self.named_params():
            yield p

    def state_dict(self):
        state = {name: p.data.copy() for name, p in self.named_params()}
        for name, buf in self.named_buffers():
            state[name] = buf.value.copy()
        return state

    def load_state_dict(self, state):
        own = dict(self.named_params())
        bufs = dict(self.named_buffers())
        missing = (set(own) | set(bufs)) - set(state)
        extra = set(state) - (set(own) | set(bufs))
        if missing or extra:
            raise KeyError(f"state dict mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, p in own.items():
            if p.data.shape != state[name].shape:
                raise ValueError(f"shape mismatch for {name}: {p.data.shape} vs {state[name].shape}")
            p.data = np.ascontiguousarray(state[name]).astype(p.data.dtype, copy=True)
        for name, buf in bufs.items():
            buf.value[...] = state[name]


class _Buffer:
    """Non-trainable state (BN running stats); wrapped so tree walks find it."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class Conv2d(Module):
    def __init__(self, cin, cout, kernel, rng, stride=1, padding=None,
                 dilation=1, groups=1, bias=True, dtype=np.float32):
        if padding is None:
            padding = dilation * (kernel - 1) // 2
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        self.groups = groups
        fan_in = (cin // groups) * kernel * kernel
        std = np.sqrt(2.0 / fan_in)
        shape = (cout, cin // groups, kernel, kernel)
        self.weight = Param((rng.standard_normal(shape) * std).astype(dtype))
        self.bias = Param(np.zeros(cout, dtype=dtype)) if bias else None

    def __call__(self, x, training=False):
        return F.conv2d(x, self.weight, self.bias, self.stride, self.padding,
                        self.dilation, self.groups)


class ConvTranspose2d(Module):
    def __init__(self, cin, cout, kernel, rng, stride=2, padding=None,
                 output_padding=None, bias=True, dtype=np.float32):
        if padding is None:
            padding = (kernel - 1) // 2
        if output_padding is None:
            output_padding = (stride + 2 * padding - kernel) % stride
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding
        fan_in = cin * kernel * kernel
        std = np.sqrt(2.0 / fan_in)
        shape = (cin, cout, kernel, kernel)
        self.weight = Param((rng.standard_normal(shape) * std).astype(dtype))
        self.bias = Param(np.zeros(cout, dtype=dtype)) if bias else None

    def __call__(self, x, training=False):
        return F.conv_transpose2d(x, self.weight, self.bias, self.stride,
                                  self.padding, self.output_padding)


class BatchNorm2d(Module):
    def __init__(self, channels, dtype=np.float32, momentum=0.1, eps=1e-5):
        self.momentum = momentum
        self.eps = eps
        self.weight = Param(np.ones(channels, dtype=dtype))
        self.bias = Param(np.zeros(channels, dtype=dtype))
        self.running_mean = _Buffer(np.zeros(channels, dtype=dtype))
        self.running_var = _Buffer(np.ones(channels, dtype=dtype))

    def __call__(self, x, training=False):
        return F.batch_norm2d(x, self.weight, self.bias, self.running_mean.value,
                              self.running_var.value, training,
                              self.momentum, self.eps)


class ConvBN(Module):
    def __init__(self, cin, cout, kernel, rng, stride=1, padding=None,
                 dilation=1, groups=1, dtype=np.float32, relu=True):
        self.conv = Conv2d(cin, cout, kernel, rng, stride, padding, dilation,
                           groups, bias=False, dtype=dtype)
        self.bn = BatchNorm2d(cout, dtype=dtype)
        self.relu = relu

    def __call__(self, x, training=False):
        y = self.bn(self.conv(x), training)
        return F.relu(y) if self.relu else y


class SeparableConvBN(Module):
    """Depthwise conv + BN + ReLU followed by pointwise conv + BN (+ReLU)."""

    def __init__(self, cin, cout, kernel, rng, stride=1, padding=None,
                 dilation=1, dtype=np.float32, relu=True):
        self.depthwise = Conv2d(cin, cin, kernel, rng, stride, padding, dilation,
                                groups=cin, bias=False, dtype=dtype)
        self.bn_dw = BatchNorm2d(cin, dtype=dtype)
        self.pointwise = Conv2d(cin, cout, 1, rng, bias=False, dtype=dtype)
        self.bn_pw = BatchNorm2d(cout, dtype=dtype)
        self.relu = relu

    def __call__(self, x, training=False):
        y = F.relu(self.bn_dw(self.depthwise(x), training))
        y = self.bn_pw(self.pointwise(y), training)
        return F.relu(y) if self.relu else y


class Sequential(Module):
    def __init__(self, *modules):
        self.items = list(modules)

    def __call__(self, x, training=False):
        for m in self.items:
            x = m(x, training)
        return x

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

"""Minimal parameter-container machinery for the network blocks."""

from __future__ import annotations

import dataclasses

import numpy as np

from .nn_ops import conv2d, normalize, same_padding
from .tensor import Tensor


class Module:
    """Base class: walks attributes to collect named parameters."""

    def named_params(self, prefix: str = ""):
        out = []
        for name, value in vars(self).items():
            out.extend(_collect(value, f"{prefix}{name}"))
        return out

    def params(self):
        return [t for _, t in self.named_params()]

    def num_params(self) -> int:
        return sum(t.size for t in self.params())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _collect(value, name):
    if isinstance(value, Tensor):
        return [(name, value)] if value.requires_grad else []
    if isinstance(value, Module):
        return value.named_params(prefix=name + ".")
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        out = []
        for f in dataclasses.fields(value):
            out.extend(_collect(getattr(value, f.name), f"{name}.{f.name}"))
        return out
    if isinstance(value, (list, tuple)):
        out = []
        for i, item in enumerate(value):
            out.extend(_collect(item, f"{name}[{i}]"))
        return out
    return []


class Conv2d(Module):
    """Convolution layer; padding defaults to size-preserving ("same")."""

    def __init__(self, cin: int, cout: int, k: int, rng: np.random.Generator,
                 stride: int = 1, dilation: int = 1, groups: int = 1,
                 padding: int | None = None, bias: bool = True):
        fan_in = (cin // groups) * k * k
        std = np.sqrt(2.0 / fan_in)
        self.weight = Tensor(rng.normal(0.0, std, (cout, cin // groups, k, k)),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(cout), requires_grad=True) if bias else None
        self.stride = stride
        self.dilation = dilation
        self.groups = groups
        self.padding = same_padding(k, dilation) if padding is None else padding

    def forward(self, x):
        return conv2d(x, self.weight, self.bias, stride=self.stride,
                      dilation=self.dilation, groups=self.groups, padding=self.padding)


class Norm(Module):
    def __init__(self, kind: str, channels: int, eps: float = 1e-5):
        self.kind = kind
        self.eps = eps
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)

    def forward(self, x):
        return normalize(x, self.kind, self.gamma, self.beta, self.eps)


class Linear(Module):
    def __init__(self, din: int, dout: int, rng: np.random.Generator, bias: bool = True):
        std = np.sqrt(2.0 / (din + dout))
        self.weight = Tensor(rng.normal(0.0, std, (din, dout)), requires_grad=True)
        self.bias = Tensor(np.zeros(dout), requires_grad=True) if bias else None

    def forward(self, x):
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out

"""Dense tensors with reverse-mode automatic differentiation.

Every forward operation builds a node in a computation graph; calling
``backward()`` on a scalar replays the recorded vector-Jacobian products in
reverse topological order and accumulates gradients into grad-tracked leaves.
All data is float64 by default (float32 is accepted and preserved, intended
for benchmarking only).
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from scipy.special import erf as _erf

_FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True


def is_grad_enabled() -> bool:
    return _grad_enabled


@contextmanager
def no_grad():
    """Disable graph recording inside the block (forward-only evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(data, dtype=None):
    if isinstance(data, np.ndarray) and dtype is None and data.dtype in _FLOAT_DTYPES:
        return data
    if dtype is None:
        dtype = np.float64
    return np.asarray(data, dtype=dtype)


class Tensor:
    """N-d real array; immutable after construction except for ``grad``."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "_op", "_backward_ran")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._vjp = None
        self._op = "leaf"
        self._backward_ran = False

    # -- basic introspection ------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self._op})"

    def item(self) -> float:
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # -- graph machinery ----------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(leaf) into ``grad`` of every tracked leaf."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.shape}")
        if not self.requires_grad:
            raise RuntimeError("loss does not depend on any grad-tracked tensor")
        if self._backward_ran:
            raise RuntimeError("backward already ran for this graph; build a fresh loss")
        self._backward_ran = True

        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        # vjp outputs may alias each other (e.g. both halves of an add), so a
        # stored gradient is never mutated in place until this pass owns it.
        grads = {id(self): np.ones_like(self.data)}
        owned = {id(self)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            owned.discard(id(node))
            if node._vjp is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not p.requires_grad:
                    continue
                key = id(p)
                if key not in grads:
                    grads[key] = pg
                elif key in owned:
                    grads[key] += pg
                else:
                    grads[key] = grads[key] + pg
                    owned.add(key)

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        return reshape(self, *shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis, keepdims)

    @property
    def T(self):
        return transpose(self, None)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_op(data, parents, vjp, op: str) -> Tensor:
    """Build a graph node: record parents + vector-Jacobian product if tracking."""
    parents = tuple(as_tensor(p) for p in parents)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
        out._op = op
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the parent's shape."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- arithmetic ---------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return make_op(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return make_op(out, (a, b), vjp, "div")


def neg(a):
    a = as_tensor(a)
    return make_op(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, p: float):
    a = as_tensor(a)
    if not np.isscalar(p):
        raise TypeError("power expects a scalar exponent")
    out = a.data ** p
    return make_op(out, (a,), lambda g: (g * p * a.data ** (p - 1),), "pow")


def texp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return make_op(out, (a,), lambda g: (g * out,), "exp")


def tlog(a):
    a = as_tensor(a)
    return make_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def tsqrt(a):
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return make_op(out, (a,), lambda g: (g * 0.5 / out,), "sqrt")


def tabs(a):
    """Elementwise absolute value; subgradient 0 at exact zeros."""
    a = as_tensor(a)
    return make_op(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), "abs")


# -- reductions ---------------------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return make_op(out, (a,), vjp, "sum")


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod(
        [a.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return mul(tsum(a, axis, keepdims), 1.0 / float(n))


def cumsum(a, axis: int):
    a = as_tensor(a)

    def vjp(g):
        rev = np.flip(g, axis=axis)
        return (np.flip(np.cumsum(rev, axis=axis), axis=axis),)

    return make_op(np.cumsum(a.data, axis=axis), (a,), vjp, "cumsum")


# -- shape manipulation -------------------------------------------------------


def reshape(a, *shape):
    a = as_tensor(a)
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    return make_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None):
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = np.argsort(axes)
    return make_op(
        np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),), "transpose"
    )


def swapaxes(a, ax1: int, ax2: int):
    axes = list(range(as_tensor(a).ndim))
    axes[ax1], axes[ax2] = axes[ax2], axes[ax1]
    return transpose(a, tuple(axes))


def getitem(a, idx):
    a = as_tensor(a)
    out = a.data[idx]

    def vjp(g):
        buf = np.zeros_like(a.data)
        np.add.at(buf, idx, g)
        return (buf,)

    return make_op(out, (a,), vjp, "getitem")


def concat(tensors, axis: int = 0):
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return make_op(out, tuple(tensors), vjp, "concat")


def stack(tensors, axis: int = 0):
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.moveaxis(g, axis, 0))

    return make_op(out, tuple(tensors), vjp, "stack")


# -- linear algebra -----------------------------------------------------------


def matmul(a, b):
    """Matrix product with numpy batching semantics on leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return (_unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape))

    return make_op(out, (a, b), vjp, "matmul")


# -- activations --------------------------------------------------------------

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return make_op(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,), "relu")


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return make_op(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def gelu(a):
    """Exact (erf-based) GELU."""
    a = as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + _erf(x * _INV_SQRT2))
    out = x * cdf

    def vjp(g):
        pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
        return (g * (cdf + x * pdf),)

    return make_op(out, (a,), vjp, "gelu")


def silu(a):
    a = as_tensor(a)
    s = 1.0 / (1.0 + np.exp(-a.data))
    out = a.data * s

    def vjp(g):
        return (g * (s + a.data * s * (1.0 - s)),)

    return make_op(out, (a,), vjp, "silu")


def elu_plus_one(a):
    """elu(x) + 1: strictly positive kernel feature map."""
    a = as_tensor(a)
    pos = a.data > 0
    ex = np.exp(np.where(pos, 0.0, a.data))
    out = np.where(pos, a.data + 1.0, ex)

    def vjp(g):
        return (g * np.where(pos, 1.0, ex),)

    return make_op(out, (a,), vjp, "elu_plus_one")


def softmax_lastdim(a):
    a = as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return make_op(out, (a,), vjp, "softmax")


_ACTIVATIONS = {
    "sigmoid": sigmoid,
    "softmax_lastdim": softmax_lastdim,
    "gelu": gelu,
    "silu": silu,
    "elu_plus_one": elu_plus_one,
    "relu": relu,
}


def activation(x, kind: str):
    """Dispatch by name; softmax applies over the last axis."""
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise ValueError(f"unknown activation kind {kind!r}") from None


# -- misc ---------------------------------------------------------------------


def log1p_exp(a):
    """log(1 + exp(x)), computed stably (softplus)."""
    a = as_tensor(a)
    x = a.data
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    s = 1.0 / (1.0 + np.exp(-x))
    return make_op(out, (a,), lambda g: (g * s,), "log1p_exp")


def zeros(shape, requires_grad=False):
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def ones(shape, requires_grad=False):
    return Tensor(np.ones(shape), requires_grad=requires_grad)


def first_nonfinite_op(root: Tensor):
    """Name of the first recorded op whose output is non-finite, or None.

    Walks the graph bottom-up so the op reported is the one that introduced
    the problem, not a downstream consumer.
    """
    topo = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    for node in topo:
        if not np.all(np.isfinite(node.data)):
            if all(np.all(np.isfinite(p.data)) for p in node._parents):
                return node._op
    return None

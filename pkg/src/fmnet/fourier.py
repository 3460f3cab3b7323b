"""2-D discrete Fourier transforms and complex tensors.

The transform itself is built here rather than taken from a library: an
iterative radix-2 Cooley-Tukey pass for power-of-two plane sizes, with a
direct DFT-matrix product as the fallback for other sizes. Both paths are
vectorized over all leading (batch/channel) axes.

Conventions: unnormalized forward transform, 1/(H*W) on the inverse, so
``ifft2(fft2(x)) == x`` and Parseval reads
``sum |x|^2 == sum |fft2(x)|^2 / (H*W)``.

Complex values are carried as (re, im) pairs of real tensors, which lets the
real-valued autodiff engine differentiate through every complex operation.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, as_tensor, make_op

# -- raw transforms (ndarray -> ndarray, complex128) ---------------------------

_dft_matrix_cache: dict[tuple[int, int], np.ndarray] = {}


def _dft_matrix(n: int, sign: int) -> np.ndarray:
    key = (n, sign)
    mat = _dft_matrix_cache.get(key)
    if mat is None:
        k = np.arange(n)
        mat = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
        _dft_matrix_cache[key] = mat
    return mat


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_lastaxis(a: np.ndarray, sign: int) -> np.ndarray:
    """Unnormalized DFT along the last axis; sign=-1 forward, +1 inverse."""
    n = a.shape[-1]
    if n == 1:
        return a.astype(np.complex128, copy=True)
    if n & (n - 1):  # not a power of two: direct matrix product
        return a @ _dft_matrix(n, sign)
    out = a[..., _bit_reverse_indices(n)].astype(np.complex128, copy=True)
    half = 1
    while half < n:
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / (2 * half))
        blocks = out.reshape(*out.shape[:-1], n // (2 * half), 2 * half)
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        half *= 2
    return out


def _raw_fft2(a: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT over the trailing two axes."""
    step = _fft_lastaxis(np.asarray(a, dtype=np.complex128), -1)
    step = _fft_lastaxis(np.swapaxes(step, -1, -2), -1)
    return np.swapaxes(step, -1, -2)


def _raw_ifft2_unnorm(a: np.ndarray) -> np.ndarray:
    """Unnormalized inverse 2-D DFT (no 1/(H*W) factor)."""
    step = _fft_lastaxis(np.asarray(a, dtype=np.complex128), +1)
    step = _fft_lastaxis(np.swapaxes(step, -1, -2), +1)
    return np.swapaxes(step, -1, -2)


# -- complex tensors ------------------------------------------------------------


class ComplexTensor:
    """Pair of same-shape real tensors interpreted as re + i*im."""

    __slots__ = ("re", "im")

    def __init__(self, re: Tensor, im: Tensor):
        re, im = as_tensor(re), as_tensor(im)
        if re.shape != im.shape:
            raise ValueError(f"re/im shape mismatch: {re.shape} vs {im.shape}")
        self.re = re
        self.im = im

    @property
    def shape(self):
        return self.re.shape

    def __repr__(self):
        return f"ComplexTensor(shape={self.shape})"

    @classmethod
    def from_real(cls, x: Tensor) -> "ComplexTensor":
        x = as_tensor(x)
        return cls(x, Tensor(np.zeros_like(x.data)))

    def to_numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def conj(self) -> "ComplexTensor":
        return ComplexTensor(self.re, -self.im)

    def reshape(self, *shape) -> "ComplexTensor":
        return ComplexTensor(self.re.reshape(*shape), self.im.reshape(*shape))

    def transpose(self, axes=None) -> "ComplexTensor":
        return ComplexTensor(self.re.transpose(*axes) if axes else self.re.T,
                             self.im.transpose(*axes) if axes else self.im.T)

    def swapaxes(self, ax1: int, ax2: int) -> "ComplexTensor":
        from .tensor import swapaxes as _sw
        return ComplexTensor(_sw(self.re, ax1, ax2), _sw(self.im, ax1, ax2))

    def __add__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor(self.re + other.re, self.im + other.im)

    def __mul__(self, other):
        if isinstance(other, ComplexTensor):
            return ComplexTensor(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        # real (Tensor or scalar) scale
        return ComplexTensor(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __matmul__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor(
            self.re @ other.re - self.im @ other.im,
            self.re @ other.im + self.im @ other.re,
        )


def magnitude(z: ComplexTensor) -> Tensor:
    """|z| with subgradient 0 at exact zeros."""
    re, im = z.re, z.im
    mag = np.hypot(re.data, im.data)

    def vjp(g):
        safe = np.where(mag == 0.0, 1.0, mag)
        scale = np.where(mag == 0.0, 0.0, g / safe)
        return (scale * re.data, scale * im.data)

    return make_op(mag, (re, im), vjp, "magnitude")


# -- differentiable transforms --------------------------------------------------


def _fft_node(x_re: Tensor, x_im, forward: bool):
    """Shared builder for fft2/ifft2 graph nodes.

    The adjoint of the unnormalized forward DFT F is its conjugate, i.e. the
    unnormalized inverse; the adjoint of the normalized inverse is F/(H*W).
    Each output part contributes independently through those linear maps.
    """
    z = x_re.data + 1j * x_im.data if x_im is not None else x_re.data
    if forward:
        spec = _raw_fft2(z)
    else:
        h, w = z.shape[-2], z.shape[-1]
        spec = _raw_ifft2_unnorm(z) / (h * w)

    h, w = z.shape[-2], z.shape[-1]
    parents = (x_re,) if x_im is None else (x_re, x_im)

    def adjoint(gc):
        if forward:
            return _raw_ifft2_unnorm(gc)
        return _raw_fft2(gc) / (h * w)

    def vjp_re(g):
        c = adjoint(g)
        if x_im is None:
            return (c.real.copy(),)
        return (c.real.copy(), c.imag.copy())

    def vjp_im(g):
        c = adjoint(1j * g)
        if x_im is None:
            return (c.real.copy(),)
        return (c.real.copy(), c.imag.copy())

    name = "fft2" if forward else "ifft2"
    out_re = make_op(spec.real.copy(), parents, vjp_re, name + ".re")
    out_im = make_op(spec.imag.copy(), parents, vjp_im, name + ".im")
    return ComplexTensor(out_re, out_im)


def fft2(x) -> ComplexTensor:
    """Unnormalized forward 2-D DFT over the trailing two axes."""
    if isinstance(x, ComplexTensor):
        return _fft_node(x.re, x.im, forward=True)
    x = as_tensor(x)
    if x.ndim < 2:
        raise ValueError("fft2 needs at least 2 axes")
    return _fft_node(x, None, forward=True)


def ifft2(x) -> ComplexTensor:
    """Inverse 2-D DFT with 1/(H*W) normalization."""
    if isinstance(x, ComplexTensor):
        return _fft_node(x.re, x.im, forward=False)
    x = as_tensor(x)
    if x.ndim < 2:
        raise ValueError("ifft2 needs at least 2 axes")
    return _fft_node(x, None, forward=False)

"""Frequency-domain attention primitives.

The transpose attention map lives on the channel axis (a C x C map per
batch element), so its cost is independent of the squared token count. Its
complex scores are activated by softmaxing the real and imaginary parts
separately and recombining them into a complex map whose real-part rows and
imaginary-part rows each sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import ComplexTensor, fft2, ifft2, magnitude
from .nn_ops import conv2d, normalize
from .tensor import Tensor, as_tensor, gelu, sigmoid, softmax_lastdim


@dataclass
class ComplexAttentionMap:
    """Row-stochastic real and imaginary parts of a channel attention map."""

    map: ComplexTensor

    @property
    def re(self) -> Tensor:
        return self.map.re

    @property
    def im(self) -> Tensor:
        return self.map.im


def complex_softmax(a_prime: ComplexTensor) -> ComplexAttentionMap:
    """Softmax the real and imaginary parts row-wise, recombine as complex.

    Splitting via (A + conj(A))/2 and (A - conj(A))/(2i) is exactly the
    real/imaginary decomposition, so the parts are softmaxed directly.
    """
    shape = a_prime.shape
    if len(shape) < 2 or shape[-1] != shape[-2]:
        raise ValueError(f"transpose attention map must be square, got {shape}")
    return ComplexAttentionMap(
        ComplexTensor(softmax_lastdim(a_prime.re), softmax_lastdim(a_prime.im))
    )


def freq_transpose_attention(x, q_proj=None, k_proj=None, v_proj=None) -> Tensor:
    """Channel-transpose attention in the spectral domain.

    x: [B, C, H, W]. Queries, keys, and values are all the spectrum of x
    (optional per-stream 1x1 convolutions are off by default); spectra are
    flattened to [C, H*W], scored into a C x C complex map, softmax-activated
    per part, applied to the values, inverse-transformed, and returned as a
    magnitude (hence nonnegative output).
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ValueError(f"expected [B,C,H,W], got {x.shape}")
    b, c, h, w = x.shape

    def stream(proj):
        inp = x if proj is None else conv2d(x, proj[0], proj[1])
        return fft2(inp).reshape(b, c, h * w)

    q = stream(q_proj)
    k = q if k_proj is None and q_proj is None else stream(k_proj)
    v = q if v_proj is None and q_proj is None else stream(v_proj)

    a_prime = q @ k.transpose((0, 2, 1))               # [B, C, C] complex
    a_f = complex_softmax(a_prime).map
    out_spec = (a_f @ v).reshape(b, c, h, w)
    return magnitude(ifft2(out_spec))


@dataclass
class FwmParams:
    """Weight pipeline of the frequency weight module.

    Two 1x1 convolution stages with batch norm and GELU between and a
    sigmoid at the end; consumes the magnitude spectrum and emits a real
    weight map in (0, 1) with the input's channel count. 1x1 kernels keep
    spectrum positions unmixed (frequency bins are not translation-related).
    """

    w1: Tensor
    b1: Tensor
    bn_gamma: Tensor
    bn_beta: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, channels: int, rng: np.random.Generator) -> "FwmParams":
        std = 1.0 / np.sqrt(channels)
        return cls(
            w1=Tensor(rng.normal(0.0, std, (channels, channels, 1, 1)), requires_grad=True),
            b1=Tensor(np.zeros(channels), requires_grad=True),
            bn_gamma=Tensor(np.ones(channels), requires_grad=True),
            bn_beta=Tensor(np.zeros(channels), requires_grad=True),
            w2=Tensor(rng.normal(0.0, std, (channels, channels, 1, 1)), requires_grad=True),
            b2=Tensor(np.zeros(channels), requires_grad=True),
        )

    def weight_map(self, mag_spectrum: Tensor) -> Tensor:
        t = conv2d(mag_spectrum, self.w1, self.b1)
        t = gelu(normalize(t, "batch", self.bn_gamma, self.bn_beta))
        return sigmoid(conv2d(t, self.w2, self.b2))


def fwm(x, p: FwmParams, force_identity_weights: bool = False) -> Tensor:
    """|ifft2(W(|fft2(x)|) * fft2(x))|: learned real gating of the spectrum.

    The weight map is a pointwise function of the (conjugate-symmetric)
    magnitude spectrum, so for real x the gated spectrum stays
    conjugate-symmetric and the inverse transform is real up to rounding.
    """
    x = as_tensor(x)
    spec = fft2(x)
    if force_identity_weights:
        return magnitude(ifft2(spec))
    weights = p.weight_map(magnitude(spec))
    return magnitude(ifft2(spec * weights))

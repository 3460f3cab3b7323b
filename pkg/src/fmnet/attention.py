"""Attention kernels: softmax attention, linear attention (parallel and
recurrent forms), the selective state-space scan, and the positional
encodings (RoPE, LePE, CPE) combined in Mamba-like linear attention.

Softmax attention over N tokens costs O(N^2 * D); the linear-attention
variants replace the softmax with a positive kernel feature map phi so the
key-value statistics can be accumulated once, giving O(N * D * D_h). The
recurrent form maintains running sums S_j = S_{j-1} + K_j^T V_j and
Z_j = Z_{j-1} + K_j^T with y_j = Q_j S_j / (Q_j Z_j); the parallel causal
form computes the same prefix sums with a cumulative sum, and the
non-causal form uses the full sums (image tokens carry no causal order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (
    Tensor,
    as_tensor,
    concat,
    cumsum,
    elu_plus_one,
    matmul,
    no_grad,
    reshape,
    softmax_lastdim,
    stack,
    tsum,
)
from .nn_ops import conv2d, same_padding

# -- configs --------------------------------------------------------------------


@dataclass(frozen=True)
class RopeConfig:
    """Rotary encoding: pair (2i, 2i+1) rotates by angle m * theta_i."""

    dim: int
    base: float = 10000.0

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise ValueError(f"rope dim must be even and positive, got {self.dim}")

    def thetas(self) -> np.ndarray:
        i = np.arange(self.dim // 2)
        return self.base ** (-2.0 * i / self.dim)


@dataclass
class SSMParams:
    """Inputs of the selective scan h_j = A_j*h_{j-1} + B_j (Delta_j*x_j)."""

    a_tilde: Tensor  # [N, d] forget gate in [0, 1]
    b: Tensor        # [N, d]
    c: Tensor        # [N, d]
    delta: Tensor    # [N, C]
    d_skip: Tensor   # [C]
    x: Tensor        # [N, C]

    def validate(self):
        n, d = self.a_tilde.shape
        if self.b.shape != (n, d) or self.c.shape != (n, d):
            raise ValueError("A/B/C sequence shapes disagree")
        if self.delta.shape[0] != n or self.x.shape[0] != n:
            raise ValueError("Delta/x sequence length disagrees with A/B/C")
        cd = self.x.shape[1]
        if self.delta.shape != (n, cd) or self.d_skip.shape != (cd,):
            raise ValueError("Delta/D/x channel dims disagree")
        return n, d, cd


_KERNELS = {"elu_plus_one": elu_plus_one, "identity": lambda t: t}


def _apply_kernel(q: Tensor, k: Tensor, phi: str):
    try:
        fn = _KERNELS[phi]
    except KeyError:
        raise ValueError(f"unknown kernel {phi!r}") from None
    qp, kp = fn(q), fn(k)
    if phi != "elu_plus_one":
        with no_grad():
            if np.any(qp.data <= 0) or np.any(kp.data <= 0):
                raise ValueError(f"kernel {phi!r} produced non-positive features")
    return qp, kp


def _split_heads(t: Tensor, heads: int) -> Tensor:
    n, d = t.shape
    if d % heads:
        raise ValueError(f"dim {d} not divisible by {heads} heads")
    # [N, D] -> [heads, N, D_h]
    return reshape(t, n, heads, d // heads).transpose(1, 0, 2)


def _merge_heads(t: Tensor) -> Tensor:
    h, n, dh = t.shape
    return reshape(t.transpose(1, 0, 2), n, h * dh)


# -- softmax attention ------------------------------------------------------------


def softmax_attention(q, k, v, heads: int = 1, normalizer: str = "softmax") -> Tensor:
    """Scaled dot-product attention, heads concatenated.

    normalizer="sigmoid" is kept for comparison against the row-softmax
    default; it gates each score independently instead of normalizing rows.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.shape[0] == 0:
        raise ValueError("attention needs at least one token")
    dh = q.shape[1] // heads
    qh, kh, vh = (_split_heads(t, heads) for t in (q, k, v))
    outs = []
    for i in range(heads):
        scores = (qh[i] @ kh[i].T) * (1.0 / np.sqrt(dh))
        if normalizer == "softmax":
            attn = softmax_lastdim(scores)
        elif normalizer == "sigmoid":
            from .tensor import sigmoid
            attn = sigmoid(scores)
        else:
            raise ValueError(f"unknown normalizer {normalizer!r}")
        outs.append(attn @ vh[i])
    return _merge_heads(stack(outs, axis=0))


# -- linear attention --------------------------------------------------------------


def linear_attention_parallel(q, k, v, heads: int = 1, phi: str = "elu_plus_one",
                              causal: bool = False) -> Tensor:
    """Kernelized attention in closed form.

    Non-causal: y = phi(Q) (phi(K)^T V) / (phi(Q) phi(K)^T 1) over the full
    sequence. Causal: the same with prefix sums, matching the recurrent scan.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    qp, kp = _apply_kernel(q, k, phi)
    qh, kh, vh = _split_heads(qp, heads), _split_heads(kp, heads), _split_heads(v, heads)
    num, den = _linear_numden(qh, kh, vh, causal)
    return _merge_heads(num / den)


def _linear_numden(qh: Tensor, kh: Tensor, vh: Tensor, causal: bool):
    """Numerator [H,N,Dv] and denominator [H,N,1] of kernelized attention."""
    if causal:
        # running outer products K_j^T V_j, prefix-summed over the sequence
        h, n, dk = kh.shape
        dv = vh.shape[2]
        outer = reshape(kh, h, n, dk, 1) * reshape(vh, h, n, 1, dv)
        s_prefix = cumsum(outer, axis=1)                      # [H,N,Dk,Dv]
        num = tsum(reshape(qh, h, n, dk, 1) * s_prefix, axis=2)
        z_prefix = cumsum(kh, axis=1)                         # [H,N,Dk]
        den = tsum(qh * z_prefix, axis=2, keepdims=True)
    else:
        s = kh.transpose(0, 2, 1) @ vh                        # [H,Dk,Dv]
        num = qh @ s
        z = tsum(kh, axis=1, keepdims=True)                   # [H,1,Dk]
        den = qh @ z.transpose(0, 2, 1)
    return num, den


def linear_attention_numerator(q, k, v, heads: int = 1, phi: str = "identity",
                               causal: bool = True) -> Tensor:
    """Unnormalized kernelized attention y_j = Q_j S_j (no denominator).

    With phi="identity" this is the quantity the selective-scan
    correspondence reproduces.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if phi != "identity":
        q, k = _apply_kernel(q, k, phi)
    qh, kh, vh = (_split_heads(t, heads) for t in (q, k, v))
    num, _ = _linear_numden(qh, kh, vh, causal)
    return _merge_heads(num)


def linear_attention_recurrent(q, k, v, heads: int = 1, phi: str = "elu_plus_one") -> Tensor:
    """Causal left-to-right scan over running sums S_j, Z_j."""
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    qp, kp = _apply_kernel(q, k, phi)
    qh, kh, vh = _split_heads(qp, heads), _split_heads(kp, heads), _split_heads(v, heads)
    h, n, dk = kh.shape
    dv = vh.shape[2]
    head_outs = []
    for i in range(h):
        s = Tensor(np.zeros((dk, dv)))
        z = Tensor(np.zeros((dk, 1)))
        rows = []
        for j in range(n):
            kj = kh[i][j: j + 1]          # [1, Dk]
            s = s + kj.T @ vh[i][j: j + 1]
            z = z + kj.T
            qj = qh[i][j: j + 1]
            rows.append((qj @ s) / (qj @ z))
        head_outs.append(concat(rows, axis=0))
    return _merge_heads(stack(head_outs, axis=0))


# -- selective state-space scan ----------------------------------------------------


def ssm_scan(p: SSMParams) -> Tensor:
    """y_j = C_j h_j + D * x_j with h_j = A_j * h_{j-1} + B_j (Delta_j * x_j).

    h has shape [d, C]; B_j enters as a column [d, 1] against the row
    (Delta_j * x_j) [1, C]. Setting A=1, Delta=1, D=0, B_j=K_j^T, C_j=Q_j,
    x_j=V_j makes h_j the running sum S_j of causal linear attention and y_j
    its unnormalized output Q_j S_j.
    """
    n, d, cd = p.validate()
    h = Tensor(np.zeros((d, cd)))
    rows = []
    for j in range(n):
        bj = reshape(p.b[j], d, 1)
        dx = reshape(p.delta[j] * p.x[j], 1, cd)
        h = reshape(p.a_tilde[j], d, 1) * h + bj @ dx
        yj = reshape(p.c[j], 1, d) @ h + reshape(p.d_skip * p.x[j], 1, cd)
        rows.append(yj)
    return concat(rows, axis=0)


# -- positional encodings -----------------------------------------------------------


def _rope_tables(n: int, cfg: RopeConfig, positions=None):
    pos = np.arange(n) if positions is None else np.asarray(positions)
    ang = pos[:, None] * cfg.thetas()[None, :]
    return np.cos(ang), np.sin(ang)


def rope_encode(x, cfg: RopeConfig, positions=None) -> Tensor:
    """Rotate feature pairs by position-proportional angles. [N, dim] in/out."""
    x = as_tensor(x)
    n, dim = x.shape
    if dim != cfg.dim:
        raise ValueError(f"input dim {dim} != rope dim {cfg.dim}")
    cos, sin = _rope_tables(n, cfg, positions)
    return _rope_apply(x, Tensor(cos), Tensor(sin))


def _rope_apply(x: Tensor, cos: Tensor, sin: Tensor) -> Tensor:
    """Pairwise rotation on the last axis; cos/sin broadcast over leading axes."""
    even = x[..., 0::2]
    odd = x[..., 1::2]
    out_even = even * cos - odd * sin
    out_odd = even * sin + odd * cos
    out = stack([out_even, out_odd], axis=-1)
    return reshape(out, x.shape)


def lepe(v, w_l, dw) -> Tensor:
    """Locally-enhanced positional encoding: v + channel_map(DWConv(v)).

    v: [B, C, H, W]; dw: depthwise 3x3 kernel [C, 1, 3, 3]; w_l: [C, C]
    channel-mixing matrix applied after the depthwise convolution.
    """
    v, w_l = as_tensor(v), as_tensor(w_l)
    b, c, h, w = v.shape
    conv = conv2d(v, dw, stride=1, dilation=1, groups=c, padding=same_padding(3))
    tokens = reshape(conv, b, c, h * w).transpose(0, 2, 1) @ w_l
    return v + reshape(tokens.transpose(0, 2, 1), b, c, h, w)


def cpe(x, dw) -> Tensor:
    """Conditional positional encoding: x + depthwise 3x3 convolution."""
    x = as_tensor(x)
    c = x.shape[1]
    return x + conv2d(x, dw, stride=1, dilation=1, groups=c, padding=same_padding(3))


# -- Mamba-like linear attention -----------------------------------------------------


def mlla_attention(q, k, v, heads: int, rope_cfg: RopeConfig, w_l, dw,
                   hw: tuple[int, int], phi: str = "elu_plus_one") -> Tensor:
    """Linear attention of RoPE-rotated queries/keys over LePE-enriched values.

    q, k, v: [N, D] token features with N = h*w; rotation is applied per
    head (rope_cfg.dim == D/heads); the non-causal full-sum linear attention
    is used since image tokens have no causal order.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    n, d = q.shape
    h_sp, w_sp = hw
    if h_sp * w_sp != n:
        raise ValueError(f"token count {n} != {h_sp}x{w_sp}")
    dh = d // heads
    if rope_cfg.dim != dh:
        raise ValueError(f"rope dim {rope_cfg.dim} != head dim {dh}")

    cos, sin = _rope_tables(n, rope_cfg)
    cos_t, sin_t = Tensor(cos[:, None, :]), Tensor(sin[:, None, :])

    def rot(t):
        th = reshape(t, n, heads, dh)
        return reshape(_rope_apply(th, cos_t, sin_t), n, d)

    # value enrichment: LePE already carries the +v residual, so the
    # enriched stream is exactly v + DWConv(v) @ W_L
    v_sp = reshape(v.T, 1, d, h_sp, w_sp)
    v_enriched = reshape(lepe(v_sp, w_l, dw), d, n).T
    return linear_attention_parallel(rot(q), rot(k), v_enriched, heads=heads, phi=phi)

"""Spatial operations: convolution, pooling, normalization, resizing.

conv2d computes direct cross-correlation (no FFT tricks) through an
im2col/einsum path; its adjoints are exact, so gradient checks hold at
double-precision tolerances.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, as_tensor, make_op, tsqrt

# -- convolution ----------------------------------------------------------------


def same_padding(kernel: int, dilation: int = 1) -> int:
    """Padding that preserves spatial size at stride 1; odd kernels only."""
    if kernel % 2 == 0:
        raise ValueError(f"same padding needs an odd kernel, got {kernel}")
    return dilation * (kernel - 1) // 2


def _conv_windows(xp: np.ndarray, k: int, stride: int, dilation: int) -> np.ndarray:
    """View of shape [B, C, Ho, Wo, k, k] over a padded input."""
    win = np.lib.stride_tricks.sliding_window_view(
        xp, (dilation * (k - 1) + 1, dilation * (k - 1) + 1), axis=(2, 3)
    )
    win = win[..., ::dilation, ::dilation]
    return win[:, :, ::stride, ::stride]


def conv2d(x, weight, bias=None, stride: int = 1, dilation: int = 1,
           groups: int = 1, padding: int = 0):
    """2-D cross-correlation.

    x: [B, Cin, H, W]; weight: [Cout, Cin/groups, k, k]; bias: [Cout] or None.
    Output spatial size follows floor((H + 2p - d*(k-1) - 1)/s) + 1.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ValueError(f"conv2d expects 4-d x and weight, got {x.shape} and {weight.shape}")
    b_sz, cin, h, w = x.shape
    cout, cin_g, kh, kw = weight.shape
    if kh != kw:
        raise ValueError("only square kernels are supported")
    if cin % groups or cout % groups:
        raise ValueError(f"channels ({cin} in / {cout} out) not divisible by groups={groups}")
    if cin_g != cin // groups:
        raise ValueError(
            f"weight expects {cin_g}*{groups} input channels, x has {cin}"
        )
    k = kh
    span = dilation * (k - 1) + 1
    if h + 2 * padding < span or w + 2 * padding < span:
        raise ValueError(
            f"kernel span {span} exceeds padded input {h + 2 * padding}x{w + 2 * padding}"
        )

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = _conv_windows(xp, k, stride, dilation)
    ho, wo = win.shape[2], win.shape[3]
    cout_g = cout // groups
    # im2col: [g, B*Ho*Wo, cin_g*k*k] so the contraction is a plain matmul
    cols = win.reshape(b_sz, groups, cin_g, ho, wo, k, k)
    cols = cols.transpose(1, 0, 3, 4, 2, 5, 6).reshape(groups, b_sz * ho * wo, cin_g * k * k)
    w2 = weight.data.reshape(groups, cout_g, cin_g * k * k)
    out = np.matmul(cols, w2.transpose(0, 2, 1))            # [g, B*Ho*Wo, cout_g]
    out = out.reshape(groups, b_sz, ho, wo, cout_g)
    out = out.transpose(1, 0, 4, 2, 3).reshape(b_sz, cout, ho, wo)

    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ValueError(f"bias shape {bias.shape} != ({cout},)")
        out = out + bias.data[:, None, None]
        parents.append(bias)

    def vjp(g):
        g2 = g.reshape(b_sz, groups, cout_g, ho, wo)
        g2 = g2.transpose(1, 0, 3, 4, 2).reshape(groups, b_sz * ho * wo, cout_g)
        grad_w = None
        if weight.requires_grad:
            grad_w = np.matmul(cols.transpose(0, 2, 1), g2)  # [g, cin_g*k*k, cout_g]
            grad_w = grad_w.transpose(0, 2, 1).reshape(cout, cin_g, k, k)
        grad_x = None
        if x.requires_grad:
            gcols = np.matmul(g2, w2)                        # [g, B*Ho*Wo, cin_g*k*k]
            gcols = gcols.reshape(groups, b_sz, ho, wo, cin_g, k, k)
            gcols = gcols.transpose(1, 0, 4, 2, 3, 5, 6)     # [B, g, cin_g, Ho, Wo, k, k]
            gxp = np.zeros((b_sz, groups, cin_g) + xp.shape[2:])
            for i in range(k):
                for j in range(k):
                    gxp[:, :, :,
                        i * dilation: i * dilation + stride * ho: stride,
                        j * dilation: j * dilation + stride * wo: stride] += gcols[..., i, j]
            gxp = gxp.reshape(xp.shape)
            if padding:
                gxp = gxp[:, :, padding:-padding, padding:-padding]
            grad_x = np.ascontiguousarray(gxp)
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    return make_op(out, tuple(parents), vjp, "conv2d")


def box_filter(x, k: int):
    """Same-padded k x k box sum (stride 1, zeros outside); self-adjoint."""
    x = as_tensor(x)
    if k % 2 == 0:
        raise ValueError("box_filter needs an odd kernel")
    pad = k // 2

    def run(a):
        ap = np.pad(a, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        c = np.cumsum(ap, axis=2)
        c = np.pad(c, ((0, 0), (0, 0), (1, 0), (0, 0)))
        rows = c[:, :, k:, :] - c[:, :, :-k, :]
        c = np.cumsum(rows, axis=3)
        c = np.pad(c, ((0, 0), (0, 0), (0, 0), (1, 0)))
        return c[:, :, :, k:] - c[:, :, :, :-k]

    return make_op(run(x.data), (x,), lambda g: (run(g),), "box_filter")


def avg_pool2d(x, k: int):
    """Same-padded k x k mean with zeros counted at the borders."""
    return box_filter(x, k) * (1.0 / (k * k))


# -- normalization ----------------------------------------------------------------


def normalize(x, kind: str, gamma, beta, eps: float = 1e-5):
    """Layer norm (over channels, per position) or batch norm (per channel).

    x is [B, C, H, W] or [N, C] with gamma/beta of shape [C]. Batch kind uses
    current-batch statistics; there is no running-average state.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim == 4:
        chan_axis = 1
        shape = (1, -1, 1, 1)
    elif x.ndim == 2:
        chan_axis = 1
        shape = (1, -1)
    else:
        raise ValueError(f"normalize expects 2-d or 4-d input, got {x.shape}")

    if kind == "layer":
        axes = (chan_axis,)
    elif kind == "batch":
        axes = tuple(i for i in range(x.ndim) if i != chan_axis)
    else:
        raise ValueError(f"unknown normalize kind {kind!r}")
    if any(x.shape[a] == 0 for a in axes) or x.shape[chan_axis] == 0:
        raise ValueError("cannot normalize over a zero-size axis")

    mu = x.mean(axis=axes, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=axes, keepdims=True)
    xhat = centered / tsqrt(var + eps)
    return xhat * gamma.reshape(shape) + beta.reshape(shape)


# -- resizing ----------------------------------------------------------------------


def _lerp_axis_coeffs(n_in: int, n_out: int):
    """Half-pixel-center source indices and fractional weights, edge-clamped."""
    coords = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    lo = np.floor(coords).astype(np.intp)
    frac = coords - lo  # in [0, 1); irrelevant wherever lo and hi clamp together
    lo_c = np.clip(lo, 0, n_in - 1)
    hi_c = np.clip(lo + 1, 0, n_in - 1)
    return lo_c, hi_c, frac


def _resize_matrix(n_in: int, n_out: int) -> np.ndarray:
    lo, hi, frac = _lerp_axis_coeffs(n_in, n_out)
    mat = np.zeros((n_out, n_in))
    mat[np.arange(n_out), lo] += 1.0 - frac
    mat[np.arange(n_out), hi] += frac
    return mat


def bilinear_resize(x, h_out: int, w_out: int):
    """Bilinear resampling with half-pixel centers and edge clamping.

    Constant planes are preserved exactly: the interpolation is evaluated in
    lerp form a + w*(b - a), so b == a gives a bit-identical constant.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ValueError(f"bilinear_resize expects [B,C,H,W], got {x.shape}")
    if h_out < 1 or w_out < 1:
        raise ValueError("output size must be at least 1x1")
    _, _, h, w = x.shape
    ylo, yhi, wy = _lerp_axis_coeffs(h, h_out)
    xlo, xhi, wx = _lerp_axis_coeffs(w, w_out)

    def run(a):
        rows_lo = a[:, :, ylo, :]
        rows = rows_lo + wy[None, None, :, None] * (a[:, :, yhi, :] - rows_lo)
        cols_lo = rows[:, :, :, xlo]
        return cols_lo + wx[None, None, None, :] * (rows[:, :, :, xhi] - cols_lo)

    ry_t = _resize_matrix(h, h_out).T
    rx = _resize_matrix(w, w_out)

    def vjp(g):
        return (np.matmul(np.matmul(ry_t, g), rx),)

    return make_op(run(x.data), (x,), vjp, "bilinear_resize")


def linear(x, weight, bias=None):
    """Affine map on the last axis: x @ weight + bias."""
    out = as_tensor(x) @ weight
    if bias is not None:
        out = out + bias
    return out

"""Composite network blocks: pyramidal frequency attention extraction (PFAE),
multi-scale frequency-assisted Mamba-like linear attention (MFM), the
frequency reverse decoder (FRD), and the per-level prediction heads."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import RopeConfig, cpe, mlla_attention
from .fourier import fft2, magnitude
from .frequency import FwmParams, freq_transpose_attention, fwm
from .module import Conv2d, Linear, Module, Norm
from .nn_ops import bilinear_resize
from .tensor import Tensor, activation, concat, gelu, reshape, relu, sigmoid, stack

# -- PFAE -----------------------------------------------------------------------


@dataclass(frozen=True)
class PfaeConfig:
    in_channels: int
    reduced_channels: int = 128
    dilations: tuple = (1, 3, 5, 7)  # branch n >= 2 uses 2n-1; branch 1 uses 1

    def __post_init__(self):
        for n, z in enumerate(self.dilations[1:], start=2):
            if z != 2 * n - 1:
                raise ValueError(f"branch {n} dilation must be {2 * n - 1}, got {z}")


class PfaeBranch(Module):
    def __init__(self, channels: int, dilation: int, rng: np.random.Generator):
        self.dilated = Conv2d(channels, channels, 3, rng, dilation=dilation)
        self.proj = Conv2d(channels, channels, 1, rng)
        self.fwm = FwmParams.init(channels, rng)
        self.fuse = Conv2d(2 * channels, channels, 1, rng)

    def pre_attention(self, x):
        """The dilated-convolution sub-path: local receptive field only."""
        return self.proj(relu(self.dilated(x)))


class Pfae(Module):
    """Four dilated branches, each fusing spectral attention with a learned
    spectrum gate, chained through a running residual."""

    def __init__(self, cfg: PfaeConfig, rng: np.random.Generator):
        self.cfg = cfg
        r = cfg.reduced_channels
        self.reduce = Conv2d(cfg.in_channels, r, 1, rng)
        self.branches = [PfaeBranch(r, z, rng) for z in cfg.dilations]
        self.merge = Conv2d(len(cfg.dilations) * r, r, 1, rng)
        self.out_conv = Conv2d(r, r, 3, rng)

    def forward(self, e4):
        b, c, h, w = e4.shape
        if h < 2 or w < 2:
            raise ValueError(f"spatial extent {h}x{w} below the 2x2 minimum")
        e_hat = self.reduce(e4)
        attended = freq_transpose_attention(e_hat)
        outputs = []
        prev = None
        for branch in self.branches:
            inp = e_hat if prev is None else e_hat + prev
            tilde = branch.pre_attention(inp)
            gated = fwm(inp, branch.fwm)
            i_n = branch.fuse(concat([attended, gated], axis=1)) + tilde
            outputs.append(i_n)
            prev = i_n
        return self.out_conv(self.merge(concat(outputs, axis=1)) + e_hat)


# -- MFM ------------------------------------------------------------------------


@dataclass(frozen=True)
class MfmConfig:
    channels: int
    heads: int = 2
    kernels: tuple = (3, 5)
    mlp_ratio: int = 4
    gate_act: str = "silu"  # flag: "sigmoid" restores the literal reading

    def __post_init__(self):
        c = self.channels
        if c % 2:
            raise ValueError(f"channels must be even for the two-scale split, got {c}")
        half = c // 2
        if half % self.heads:
            raise ValueError(f"half width {half} not divisible by {self.heads} heads")
        if (half // self.heads) % 2:
            raise ValueError(f"head dim {half // self.heads} must be even for rotation pairs")


class MfmScaleBranch(Module):
    """One scale: 1x1 conv, gate activation, depthwise conv, then MLLA."""

    def __init__(self, channels: int, kernel: int, heads: int, gate_act: str,
                 rng: np.random.Generator):
        self.proj = Conv2d(channels, channels, 1, rng)
        self.dw = Conv2d(channels, channels, kernel, rng, groups=channels)
        self.q = Linear(channels, channels, rng)
        self.k = Linear(channels, channels, rng)
        self.lepe_w = Tensor(rng.normal(0.0, 1.0 / np.sqrt(channels), (channels, channels)),
                             requires_grad=True)
        self.lepe_dw = Tensor(rng.normal(0.0, np.sqrt(2.0 / 9.0), (channels, 1, 3, 3)),
                              requires_grad=True)
        self.heads = heads
        self.rope = RopeConfig(dim=channels // heads)
        self.gate_act = gate_act

    def forward(self, x_half, hw):
        b, c, h, w = x_half.shape
        u = self.dw(activation(self.proj(x_half), self.gate_act))
        tokens = reshape(u, b, c, h * w).transpose(0, 2, 1)  # [B, N, C]
        outs = []
        for i in range(b):
            t = tokens[i]
            outs.append(mlla_attention(self.q(t), self.k(t), t, heads=self.heads,
                                       rope_cfg=self.rope, w_l=self.lepe_w,
                                       dw=self.lepe_dw, hw=hw))
        return stack(outs, axis=0)  # [B, N, C]


class Mfm(Module):
    def __init__(self, cfg: MfmConfig, rng: np.random.Generator):
        self.cfg = cfg
        c = cfg.channels
        half = c // 2
        self.cpe_in = Tensor(rng.normal(0.0, np.sqrt(2.0 / 9.0), (c, 1, 3, 3)),
                             requires_grad=True)
        self.ln_in = Norm("layer", c)
        self.scales = [MfmScaleBranch(half, k, cfg.heads, cfg.gate_act, rng)
                       for k in cfg.kernels]
        self.gate = Conv2d(c, c, 1, rng)
        self.out_proj = Linear(c, c, rng)
        self.fwm_in = FwmParams.init(c, rng)
        self.cpe_mid = Tensor(rng.normal(0.0, np.sqrt(2.0 / 9.0), (c, 1, 3, 3)),
                              requires_grad=True)
        self.mlp_up = Conv2d(c, cfg.mlp_ratio * c, 1, rng)
        self.mlp_down = Conv2d(cfg.mlp_ratio * c, c, 1, rng)
        self.ln_out = Norm("layer", c)
        self.fwm_out = FwmParams.init(c, rng)

    def forward(self, e):
        b, c, h, w = e.shape
        if c != self.cfg.channels:
            raise ValueError(f"expected {self.cfg.channels} channels, got {c}")
        half = c // 2
        t = self.ln_in(cpe(e, self.cpe_in))
        parts = [branch(t[:, i * half:(i + 1) * half], (h, w))
                 for i, branch in enumerate(self.scales)]
        attended = concat(parts, axis=-1)                      # [B, N, C]
        gate = activation(self.gate(t), self.cfg.gate_act)
        gate_tok = reshape(gate, b, c, h * w).transpose(0, 2, 1)
        f1 = self.out_proj(attended * gate_tok)
        f1_sp = reshape(f1.transpose(0, 2, 1), b, c, h, w)
        f2 = cpe(f1_sp + fwm(e, self.fwm_in) + e, self.cpe_mid)
        mlp = self.mlp_down(gelu(self.mlp_up(f2)))
        return f2 + self.ln_out(mlp) + fwm(f2, self.fwm_out)


# -- FRD ------------------------------------------------------------------------


class Frd(Module):
    """Cross-level aggregation with a frequency-spatial reverse attention map.

    aux_channels lists the channel width of each auxiliary input (higher-level
    features), deepest first as they will be passed to forward().
    """

    def __init__(self, channels: int, aux_channels: list[int], rng: np.random.Generator):
        if not aux_channels:
            raise ValueError("FRD needs at least one auxiliary input")
        self.channels = channels
        self.expand = [Conv2d(ca, channels, 1, rng) for ca in aux_channels]
        self.con_conv = Conv2d(channels, channels, 3, rng)
        self.con_bn = Norm("batch", channels)
        self.out_conv = Conv2d((2 + len(aux_channels)) * channels, channels, 3, rng)

    def forward(self, f, aux):
        if len(aux) != len(self.expand):
            raise ValueError(f"expected {len(self.expand)} auxiliaries, got {len(aux)}")
        _, _, h, w = f.shape
        expanded = [ex(bilinear_resize(a, h, w)) for ex, a in zip(self.expand, aux)]
        g1 = concat([f] + expanded, axis=1)
        ra = None
        for ea in expanded:
            term = (1.0 - sigmoid(ea)) + (1.0 - sigmoid(magnitude(fft2(ea))))
            ra = term if ra is None else ra + term
        g2 = ra * f
        con = relu(self.con_bn(self.con_conv(g2)))
        return self.out_conv(concat([g1, con], axis=1)) + f


def reverse_attention_map(expanded_aux) -> Tensor:
    """Standalone RA = sum over auxiliaries of (1 - sigmoid(a)) + (1 - sigmoid(|fft2(a)|))."""
    ra = None
    for ea in expanded_aux:
        term = (1.0 - sigmoid(ea)) + (1.0 - sigmoid(magnitude(fft2(ea))))
        ra = term if ra is None else ra + term
    return ra


# -- prediction head ---------------------------------------------------------------


class PredictionHead(Module):
    """1x1 projection to a single logit plane, resized to the target size.

    The sigmoid is applied only at inference/metrics time; losses consume
    the raw logits.
    """

    def __init__(self, channels: int, rng: np.random.Generator):
        self.proj = Conv2d(channels, 1, 1, rng)

    def forward(self, g, out_hw):
        logits = self.proj(g)
        if logits.shape[2:] != tuple(out_hw):
            logits = bilinear_resize(logits, out_hw[0], out_hw[1])
        return logits

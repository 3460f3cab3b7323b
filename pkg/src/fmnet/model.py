"""Toy pyramid encoder and the full network assembly.

The encoder is a plain stack of strided convolutions standing in for a
pretrained backbone: level i has spatial stride 2^(i+1), i.e. strides
4, 8, 16, 32 for the four levels, with the PFAE output at stride 32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import Frd, Mfm, MfmConfig, Pfae, PfaeConfig, PredictionHead
from .module import Conv2d, Module, Norm
from .tensor import Tensor, relu


@dataclass(frozen=True)
class ModelConfig:
    input_hw: tuple = (64, 64)
    encoder_widths: tuple = (16, 32, 64, 128)
    pfae_reduced: int = 128
    mfm_heads: int = 2
    mfm_kernels: tuple = (3, 5)
    mlp_ratio: int = 4
    frd_immediate_only: bool = False  # True: each FRD sees only the next level up
    seed: int = 0

    def __post_init__(self):
        h, w = self.input_hw
        if h % 32 or w % 32:
            raise ValueError(f"input size {h}x{w} must be divisible by 32")
        if len(self.encoder_widths) != 4:
            raise ValueError("encoder needs exactly four level widths")

    def mfm_config(self, level: int) -> MfmConfig:
        return MfmConfig(channels=self.encoder_widths[level], heads=self.mfm_heads,
                         kernels=self.mfm_kernels, mlp_ratio=self.mlp_ratio)


@dataclass
class FeaturePyramid:
    """All named feature sets produced by one forward pass."""

    encoder: list        # E_1..E_4
    e5: Tensor           # PFAE output (= F_5)
    refined: list        # F_1..F_4
    decoded: list        # G_1..G_4
    logits: list         # level 1..5 logit maps at input resolution


class EncoderStage(Module):
    def __init__(self, cin: int, cout: int, rng: np.random.Generator, double_stride: bool):
        self.conv1 = Conv2d(cin, cout, 3, rng, stride=2)
        self.norm1 = Norm("batch", cout)
        self.conv2 = Conv2d(cout, cout, 3, rng, stride=2 if double_stride else 1)
        self.norm2 = Norm("batch", cout)

    def forward(self, x):
        x = relu(self.norm1(self.conv1(x)))
        return relu(self.norm2(self.conv2(x)))


class Encoder(Module):
    def __init__(self, widths, rng: np.random.Generator):
        self.stages = [EncoderStage(3 if i == 0 else widths[i - 1], widths[i], rng,
                                    double_stride=(i == 0))
                       for i in range(4)]

    def forward(self, img):
        _, _, h, w = img.shape
        if h % 32 or w % 32:
            raise ValueError(f"input {h}x{w} not divisible by 32")
        feats = []
        x = img
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        return feats


class FMNet(Module):
    """Encoder, PFAE neck, per-level MFM refinement, FRD decoding, heads."""

    def __init__(self, cfg: ModelConfig):
        rng = np.random.default_rng(cfg.seed)
        self.cfg = cfg
        widths = cfg.encoder_widths
        self.encoder = Encoder(widths, rng)
        self.pfae = Pfae(PfaeConfig(in_channels=widths[3],
                                    reduced_channels=cfg.pfae_reduced), rng)
        self.mfms = [Mfm(cfg.mfm_config(i), rng) for i in range(4)]
        r = cfg.pfae_reduced
        # level i auxiliaries: G_{i+1}..G_4 then F_5 (or only the next level up)
        self.frds = []
        for i in range(4):
            if cfg.frd_immediate_only:
                aux_ch = [widths[i + 1]] if i < 3 else [r]
            else:
                aux_ch = [widths[j] for j in range(i + 1, 4)] + [r]
            self.frds.append(Frd(widths[i], aux_ch, rng))
        self.heads = [PredictionHead(widths[i], rng) for i in range(4)]
        self.head5 = PredictionHead(r, rng)

    def forward(self, img) -> FeaturePyramid:
        out_hw = img.shape[2:]
        encoder_feats = self.encoder(img)
        e5 = self.pfae(encoder_feats[3])
        refined = [mfm(e) for mfm, e in zip(self.mfms, encoder_feats)]
        decoded = [None] * 4
        for i in reversed(range(4)):
            if self.cfg.frd_immediate_only:
                aux = [decoded[i + 1]] if i < 3 else [e5]
            else:
                aux = [decoded[j] for j in range(i + 1, 4)] + [e5]
            decoded[i] = self.frds[i](refined[i], aux)
        logits = [head(g, out_hw) for head, g in zip(self.heads, decoded)]
        logits.append(self.head5(e5, out_hw))
        return FeaturePyramid(encoder=encoder_feats, e5=e5, refined=refined,
                              decoded=decoded, logits=logits)


def build_model(cfg: ModelConfig) -> FMNet:
    return FMNet(cfg)

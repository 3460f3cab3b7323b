"""Seeded synthetic camouflage dataset: a textured ellipse hidden in a
textured background, with the object texture matched in mean to the
background so only texture statistics separate them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SynthConfig:
    size: int = 64
    bg_octaves: tuple = (4, 8)      # value-noise grid sizes for the background
    fg_octaves: tuple = (16, 32)    # finer grain for the object
    contrast: float = 0.22
    axis_range: tuple = (0.18, 0.34)  # semi-axes as a fraction of image size
    channel_jitter: float = 0.05


def _value_noise(rng: np.random.Generator, size: int, grid: int) -> np.ndarray:
    """Bilinearly upsampled random grid; smooth noise in [-1, 1]."""
    coarse = rng.uniform(-1.0, 1.0, (grid + 1, grid + 1))
    coords = np.linspace(0.0, grid, size)
    lo = np.clip(np.floor(coords).astype(int), 0, grid - 1)
    frac = coords - lo
    rows = coarse[lo, :] + frac[:, None] * (coarse[lo + 1, :] - coarse[lo, :])
    cols = rows[:, lo] + frac[None, :] * (rows[:, lo + 1] - rows[:, lo])
    return cols


def _texture(rng: np.random.Generator, size: int, octaves) -> np.ndarray:
    tex = np.zeros((size, size))
    amp = 1.0
    for grid in octaves:
        tex += amp * _value_noise(rng, size, grid)
        amp *= 0.5
    return tex / np.abs(tex).max()


def _ellipse_mask(rng: np.random.Generator, size: int, axis_range) -> np.ndarray:
    a = rng.uniform(*axis_range) * size
    b = rng.uniform(*axis_range) * size
    theta = rng.uniform(0.0, np.pi)
    margin = max(a, b) + 2
    cy = rng.uniform(margin, size - margin)
    cx = rng.uniform(margin, size - margin)
    yy, xx = np.mgrid[0:size, 0:size]
    y, x = yy - cy, xx - cx
    ct, st = np.cos(theta), np.sin(theta)
    u = x * ct + y * st
    v = -x * st + y * ct
    return ((u / a) ** 2 + (v / b) ** 2 <= 1.0).astype(np.float64)


def make_sample(rng: np.random.Generator, cfg: SynthConfig = SynthConfig()):
    """One (image, gt) pair: image [3, S, S] in [0, 1], gt [1, S, S] binary."""
    s = cfg.size
    mask = _ellipse_mask(rng, s, cfg.axis_range)
    base = 0.5
    bg = base + cfg.contrast * _texture(rng, s, cfg.bg_octaves)
    fg = cfg.contrast * _texture(rng, s, cfg.fg_octaves)
    fg = fg - fg[mask > 0].mean() + bg[mask > 0].mean()  # mean-matched camouflage
    plane = np.where(mask > 0, fg, bg)
    img = np.stack([
        np.clip(plane + rng.normal(0.0, cfg.channel_jitter) , 0.0, 1.0)
        for _ in range(3)
    ])
    return img, mask[None]


def make_dataset(n: int, seed: int, cfg: SynthConfig = SynthConfig()):
    rng = np.random.default_rng(seed)
    return [make_sample(rng, cfg) for _ in range(n)]

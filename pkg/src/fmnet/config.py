"""Run configuration as a structured text file (TOML sections)."""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import ModelConfig
from .synth import SynthConfig


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    steps: int = 500
    decay_boundaries: tuple = ()
    decay_factor: float = 0.1
    n_images: int = 8
    data_seed: int = 1


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = ModelConfig()
    synth: SynthConfig = SynthConfig()
    train: TrainConfig = TrainConfig()


def to_toml(cfg: RunConfig) -> str:
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, (tuple, list)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        raise TypeError(f"cannot serialize {v!r}")

    m, s, t = cfg.model, cfg.synth, cfg.train
    lines = [
        "[model]",
        f"input_hw = {fmt(m.input_hw)}",
        f"encoder_widths = {fmt(m.encoder_widths)}",
        f"pfae_reduced = {fmt(m.pfae_reduced)}",
        f"mfm_heads = {fmt(m.mfm_heads)}",
        f"mfm_kernels = {fmt(m.mfm_kernels)}",
        f"mlp_ratio = {fmt(m.mlp_ratio)}",
        f"frd_immediate_only = {fmt(m.frd_immediate_only)}",
        f"seed = {fmt(m.seed)}",
        "",
        "[synth]",
        f"size = {fmt(s.size)}",
        f"bg_octaves = {fmt(s.bg_octaves)}",
        f"fg_octaves = {fmt(s.fg_octaves)}",
        f"contrast = {fmt(s.contrast)}",
        f"axis_range = {fmt(s.axis_range)}",
        f"channel_jitter = {fmt(s.channel_jitter)}",
        "",
        "[train]",
        f"lr = {fmt(t.lr)}",
        f"steps = {fmt(t.steps)}",
        f"decay_boundaries = {fmt(t.decay_boundaries)}",
        f"decay_factor = {fmt(t.decay_factor)}",
        f"n_images = {fmt(t.n_images)}",
        f"data_seed = {fmt(t.data_seed)}",
        "",
    ]
    return "\n".join(lines)


def _tupled(d: dict, keys) -> dict:
    return {k: tuple(v) if k in keys and isinstance(v, list) else v for k, v in d.items()}


def from_dict(data: dict) -> RunConfig:
    model = ModelConfig(**_tupled(data.get("model", {}),
                                  {"input_hw", "encoder_widths", "mfm_kernels"}))
    synth = SynthConfig(**_tupled(data.get("synth", {}),
                                  {"bg_octaves", "fg_octaves", "axis_range"}))
    train = TrainConfig(**_tupled(data.get("train", {}), {"decay_boundaries"}))
    return RunConfig(model=model, synth=synth, train=train)


def load_toml(path) -> RunConfig:
    with open(path, "rb") as fh:
        return from_dict(tomllib.load(fh))


def config_as_dict(cfg: RunConfig) -> dict:
    return {
        "model": {k: list(v) if isinstance(v, tuple) else v
                  for k, v in vars(cfg.model).items()},
        "synth": {k: list(v) if isinstance(v, tuple) else v
                  for k, v in vars(cfg.synth).items()},
        "train": {k: list(v) if isinstance(v, tuple) else v
                  for k, v in vars(cfg.train).items()},
    }

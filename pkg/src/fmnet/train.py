"""Adam optimizer and the deterministic desk-scale training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .losses import pyramid_loss
from .model import FMNet
from .tensor import Tensor, first_nonfinite_op, no_grad, sigmoid


class Adam:
    def __init__(self, params, lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


@dataclass(frozen=True)
class LrSchedule:
    """Step-indexed decay: lr is multiplied by `factor` at each boundary."""

    base_lr: float = 1e-4
    boundaries: tuple = ()
    factor: float = 0.1

    def at(self, step: int) -> float:
        lr = self.base_lr
        for b in self.boundaries:
            if step >= b:
                lr *= self.factor
        return lr


@dataclass
class TrainResult:
    losses: list = field(default_factory=list)
    masks: list = field(default_factory=list)  # final sigmoid(level-1 logits) per image
    final_mae: float = float("nan")


class NanLossError(RuntimeError):
    pass


def train_overfit(model: FMNet, dataset, steps: int, schedule: LrSchedule | None = None,
                  log_every: int = 0) -> TrainResult:
    """Full-batch Adam on a fixed image set; returns the loss curve and the
    final level-1 masks. Aborts with the first NaN-producing op on a NaN loss."""
    if schedule is None:
        schedule = LrSchedule()
    imgs = Tensor(np.stack([np.asarray(img, dtype=np.float64) for img, _ in dataset]))
    gts = Tensor(np.stack([np.asarray(gt, dtype=np.float64) for _, gt in dataset]))
    opt = Adam(model.params(), lr=schedule.base_lr)
    result = TrainResult()
    for step in range(steps):
        opt.lr = schedule.at(step)
        opt.zero_grad()
        pyramid = model(imgs)
        loss = pyramid_loss(pyramid.logits, gts)
        value = loss.item()
        if not np.isfinite(value):
            op = first_nonfinite_op(loss)
            raise NanLossError(f"non-finite loss at step {step}; first bad op: {op}")
        loss.backward()
        opt.step()
        result.losses.append(value)
        if log_every and step % log_every == 0:
            print(f"step {step:5d}  lr {opt.lr:.2e}  loss {value:.5f}")
    with no_grad():
        pyramid = model(imgs)
        masks = sigmoid(pyramid.logits[0]).data
    result.masks = [masks[i, 0] for i in range(masks.shape[0])]
    result.final_mae = float(
        np.mean([np.abs((m >= 0.5).astype(float) - gts.data[i, 0]).mean()
                 for i, m in enumerate(result.masks)])
    )
    return result


def predict_mask(model: FMNet, img) -> np.ndarray:
    """Soft mask in [0,1] from the finest-level head."""
    x = np.asarray(img, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    with no_grad():
        pyramid = model(Tensor(x))
        return sigmoid(pyramid.logits[0]).data[0, 0]

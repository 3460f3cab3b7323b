"""Supervision losses: pixel-weighted BCE and IoU over a five-level pyramid.

The pixel weight w = 1 + 5*|avgpool_31(GT) - GT| emphasizes boundary-region
pixels; both losses share it. BCE is evaluated from logits in the stable
max(z,0) - z*y + log(1+exp(-|z|)) form.
"""

from __future__ import annotations

import numpy as np

from .nn_ops import avg_pool2d
from .tensor import Tensor, as_tensor, log1p_exp, no_grad, relu, sigmoid, tabs, tsum

PYRAMID_WEIGHTS = (1.0, 0.5, 0.25, 0.125, 0.0625)  # 2^(1-i), i = 1..5


def pixel_weight_map(gt: Tensor, k: int = 31, scale: float = 5.0) -> Tensor:
    """w = 1 + scale * |avgpool_k(gt) - gt| (same-padded, zeros at borders)."""
    gt = as_tensor(gt)
    with no_grad():
        pooled = avg_pool2d(gt, k)
        return Tensor(1.0 + scale * np.abs(pooled.data - gt.data))


def weighted_bce(logits, gt, weights: Tensor | None = None) -> Tensor:
    """sum(w * bce(sigmoid(z), gt)) / sum(w) over all pixels."""
    logits, gt = as_tensor(logits), as_tensor(gt)
    if logits.shape != gt.shape:
        raise ValueError(f"logits {logits.shape} vs gt {gt.shape}")
    if weights is None:
        weights = pixel_weight_map(gt)
    bce = relu(logits) - logits * gt + log1p_exp(-tabs(logits))
    return tsum(weights * bce) / float(weights.data.sum())


def weighted_iou(logits, gt, weights: Tensor | None = None, eps: float = 1e-8) -> Tensor:
    """1 - (sum(w*p*gt) + eps) / (sum(w*(p + gt - p*gt)) + eps), p = sigmoid(z).

    The eps in both numerator and denominator makes the fully-empty case
    (all-zero gt, all-zero p) come out as loss 0.
    """
    logits, gt = as_tensor(logits), as_tensor(gt)
    if logits.shape != gt.shape:
        raise ValueError(f"logits {logits.shape} vs gt {gt.shape}")
    if weights is None:
        weights = pixel_weight_map(gt)
    p = sigmoid(logits)
    inter = tsum(weights * p * gt)
    union = tsum(weights * (p + gt - p * gt))
    return 1.0 - (inter + eps) / (union + eps)


def pyramid_loss(logits_per_level, gt) -> Tensor:
    """sum_i 2^(1-i) * (weighted bce + weighted IoU) over the five levels."""
    if len(logits_per_level) != len(PYRAMID_WEIGHTS):
        raise ValueError(f"expected {len(PYRAMID_WEIGHTS)} levels, got {len(logits_per_level)}")
    gt = as_tensor(gt)
    weights = pixel_weight_map(gt)
    total = None
    for w, logits in zip(PYRAMID_WEIGHTS, logits_per_level):
        term = (weighted_bce(logits, gt, weights) + weighted_iou(logits, gt, weights)) * w
        total = term if total is None else total + term
    return total

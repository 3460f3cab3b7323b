"""Mask evaluation metrics: mean absolute error and adaptive-threshold
F-measure (beta^2 = 0.3, threshold = min(2*mean(pred), 1))."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def mae_metric(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = np.asarray(pred, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    return float(np.abs(pred - gt).mean())


def f_measure(pred: np.ndarray, gt: np.ndarray, beta2: float = 0.3) -> float:
    pred, gt = np.asarray(pred, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    positives = gt > 0.5
    if not positives.any():
        raise ValueError("f_measure undefined: ground truth has no positive pixels")
    threshold = min(2.0 * float(pred.mean()), 1.0)
    # strict comparison at threshold 0 so an all-zero prediction selects nothing
    binary = pred >= threshold if threshold > 0.0 else pred > 0.0
    tp = float(np.logical_and(binary, positives).sum())
    fp = float(np.logical_and(binary, ~positives).sum())
    fn = float(np.logical_and(~binary, positives).sum())
    if tp == 0.0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return (1.0 + beta2) * precision * recall / (beta2 * precision + recall)


@dataclass
class MetricsReport:
    """Per-image and mean metrics over an evaluation set."""

    names: list = field(default_factory=list)
    mae_values: list = field(default_factory=list)
    f_values: list = field(default_factory=list)
    beta2: float = 0.3
    threshold_policy: str = "adaptive: min(2*mean(pred), 1)"

    def add(self, name: str, pred: np.ndarray, gt: np.ndarray):
        self.names.append(name)
        self.mae_values.append(mae_metric(pred, gt))
        self.f_values.append(f_measure(pred, gt, self.beta2))

    @property
    def mean_mae(self) -> float:
        return float(np.mean(self.mae_values)) if self.mae_values else float("nan")

    @property
    def mean_f(self) -> float:
        return float(np.mean(self.f_values)) if self.f_values else float("nan")

    def csv_rows(self):
        yield ["name", "mae", "f_measure"]
        for name, m, f in zip(self.names, self.mae_values, self.f_values):
            yield [name, f"{m:.8f}", f"{f:.8f}"]
        yield ["MEAN", f"{self.mean_mae:.8f}", f"{self.mean_f:.8f}"]

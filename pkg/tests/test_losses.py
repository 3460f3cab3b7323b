"""Supervision losses against scalar-loop oracles."""

import numpy as np
import pytest

from fmnet.losses import (
    PYRAMID_WEIGHTS,
    pixel_weight_map,
    pyramid_loss,
    weighted_bce,
    weighted_iou,
)
from fmnet.tensor import Tensor


def weight_map_loop(gt, k=31, scale=5.0):
    """Scalar-loop pixel weights: same-padded box mean counting zeros."""
    b, c, h, w = gt.shape
    out = np.zeros_like(gt)
    r = k // 2
    for bi in range(b):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for dy in range(-r, r + 1):
                    for dx in range(-r, r + 1):
                        y, x = i + dy, j + dx
                        if 0 <= y < h and 0 <= x < w:
                            acc += gt[bi, 0, y, x]
                out[bi, 0, i, j] = 1.0 + scale * abs(acc / (k * k) - gt[bi, 0, i, j])
    return out


def bce_loop(logits, gt, w):
    num = den = 0.0
    for z, y, wi in zip(logits.ravel(), gt.ravel(), w.ravel()):
        p = 1.0 / (1.0 + np.exp(-z))
        bce = -(y * np.log(p) + (1 - y) * np.log(1 - p))
        num += wi * bce
        den += wi
    return num / den


def iou_loop(logits, gt, w, eps=1e-8):
    inter = union = 0.0
    for z, y, wi in zip(logits.ravel(), gt.ravel(), w.ravel()):
        p = 1.0 / (1.0 + np.exp(-z))
        inter += wi * p * y
        union += wi * (p + y - p * y)
    return 1.0 - (inter + eps) / (union + eps)


@pytest.fixture
def random_case():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(1, 1, 8, 8)) * 2
    gt = (rng.random((1, 1, 8, 8)) > 0.6).astype(float)
    return logits, gt


class TestWeightMap:
    def test_matches_loop_oracle(self, random_case):
        _, gt = random_case
        got = pixel_weight_map(Tensor(gt)).data
        want = weight_map_loop(gt)
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_range(self, random_case):
        _, gt = random_case
        w = pixel_weight_map(Tensor(gt)).data
        assert w.min() >= 1.0 and w.max() <= 6.0


class TestWeightedBce:
    def test_saturated_correct_is_near_zero(self):
        gt = (np.random.default_rng(1).random((1, 1, 6, 6)) > 0.5).astype(float)
        logits = np.where(gt > 0.5, 50.0, -50.0)
        loss = weighted_bce(Tensor(logits), Tensor(gt)).item()
        assert loss < 1e-12

    def test_zero_logits_give_ln2(self):
        gt = (np.random.default_rng(2).random((1, 1, 6, 6)) > 0.3).astype(float)
        loss = weighted_bce(Tensor(np.zeros_like(gt)), Tensor(gt)).item()
        np.testing.assert_allclose(loss, np.log(2.0), atol=1e-12)

    def test_matches_scalar_loop(self, random_case):
        logits, gt = random_case
        w = weight_map_loop(gt)
        got = weighted_bce(Tensor(logits), Tensor(gt)).item()
        assert abs(got - bce_loop(logits, gt, w)) < 1e-10

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="logits"):
            weighted_bce(Tensor(np.zeros((1, 1, 4, 4))), Tensor(np.zeros((1, 1, 5, 5))))


class TestWeightedIou:
    def test_perfect_overlap_near_zero(self):
        gt = (np.random.default_rng(3).random((1, 1, 6, 6)) > 0.5).astype(float)
        logits = np.where(gt > 0.5, 50.0, -50.0)
        loss = weighted_iou(Tensor(logits), Tensor(gt)).item()
        assert abs(loss) < 1e-6

    def test_disjoint_approaches_one(self):
        gt = np.zeros((1, 1, 6, 6))
        logits = np.full_like(gt, 50.0)
        loss = weighted_iou(Tensor(logits), Tensor(gt)).item()
        np.testing.assert_allclose(loss, 1.0, atol=1e-6)

    def test_fully_empty_case_is_zero(self):
        gt = np.zeros((1, 1, 4, 4))
        logits = np.full_like(gt, -200.0)  # p ~ 0
        loss = weighted_iou(Tensor(logits), Tensor(gt)).item()
        assert abs(loss) < 1e-6

    def test_matches_scalar_loop(self, random_case):
        logits, gt = random_case
        w = weight_map_loop(gt)
        got = weighted_iou(Tensor(logits), Tensor(gt)).item()
        assert abs(got - iou_loop(logits, gt, w)) < 1e-10


class TestPyramidLoss:
    def test_weight_vector(self):
        assert PYRAMID_WEIGHTS == (1.0, 0.5, 0.25, 0.125, 0.0625)

    def test_all_levels_perfect(self):
        gt = (np.random.default_rng(4).random((1, 1, 8, 8)) > 0.5).astype(float)
        logits = np.where(gt > 0.5, 60.0, -60.0)
        levels = [Tensor(logits) for _ in range(5)]
        assert pyramid_loss(levels, Tensor(gt)).item() < 1e-6

    def test_only_level1_imperfect_keeps_weight_one(self):
        rng = np.random.default_rng(5)
        gt = (rng.random((1, 1, 8, 8)) > 0.5).astype(float)
        perfect = np.where(gt > 0.5, 60.0, -60.0)
        noisy = rng.normal(size=gt.shape)
        levels = [Tensor(noisy)] + [Tensor(perfect) for _ in range(4)]
        total = pyramid_loss(levels, Tensor(gt)).item()
        w = pixel_weight_map(Tensor(gt))
        v = (weighted_bce(Tensor(noisy), Tensor(gt), w)
             + weighted_iou(Tensor(noisy), Tensor(gt), w)).item()
        np.testing.assert_allclose(total, v, atol=1e-6)

    def test_matches_manual_weighted_sum(self):
        rng = np.random.default_rng(6)
        gt = (rng.random((1, 1, 8, 8)) > 0.5).astype(float)
        levels = [Tensor(rng.normal(size=gt.shape)) for _ in range(5)]
        total = pyramid_loss(levels, Tensor(gt)).item()
        w = pixel_weight_map(Tensor(gt))
        manual = sum(
            wt * (weighted_bce(l, Tensor(gt), w) + weighted_iou(l, Tensor(gt), w)).item()
            for wt, l in zip(PYRAMID_WEIGHTS, levels))
        assert abs(total - manual) < 1e-12

    def test_wrong_level_count_rejected(self):
        gt = Tensor(np.zeros((1, 1, 4, 4)))
        with pytest.raises(ValueError, match="levels"):
            pyramid_loss([Tensor(np.zeros((1, 1, 4, 4)))] * 4, gt)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        gt = (rng.random((1, 1, 8, 8)) > 0.5).astype(float)
        levels = [Tensor(rng.normal(size=gt.shape) * 3) for _ in range(5)]
        assert pyramid_loss(levels, Tensor(gt)).item() >= 0.0

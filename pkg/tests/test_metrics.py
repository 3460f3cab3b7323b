"""Mask metrics against scalar loops and hand counts."""

import numpy as np
import pytest

from fmnet.metrics import MetricsReport, f_measure, mae_metric


class TestMae:
    def test_identical_is_zero(self):
        gt = (np.random.default_rng(0).random((8, 8)) > 0.5).astype(float)
        assert mae_metric(gt, gt) == 0.0

    def test_total_disagreement_is_one(self):
        gt = (np.random.default_rng(1).random((8, 8)) > 0.5).astype(float)
        assert mae_metric(1.0 - gt, gt) == 1.0

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(2)
        pred = rng.random((8, 8))
        gt = (rng.random((8, 8)) > 0.5).astype(float)
        acc = 0.0
        for i in range(8):
            for j in range(8):
                acc += abs(pred[i, j] - gt[i, j])
        # machine precision: only summation order differs from the loop
        np.testing.assert_allclose(mae_metric(pred, gt), acc / 64.0,
                                   rtol=1e-15, atol=0)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            mae_metric(np.zeros((4, 4)), np.zeros((5, 4)))


class TestFMeasure:
    def test_perfect_prediction(self):
        gt = np.zeros((6, 6))
        gt[2:5, 1:4] = 1.0
        assert f_measure(gt, gt) == 1.0

    def test_zero_prediction_zero_recall(self):
        gt = np.zeros((6, 6))
        gt[0, 0] = 1.0
        assert f_measure(np.zeros((6, 6)), gt) == 0.0

    def test_hand_counted_case(self):
        # 4x4: gt = left half (8 px), pred = 1.0 on the top-left 2x2 quadrant.
        # mean(pred) = 0.25 -> threshold 0.5 -> TP=4, FP=0, FN=4
        # P = 1, R = 0.5, F = 1.3*1*0.5 / (0.3*1 + 0.5) = 0.8125
        gt = np.zeros((4, 4))
        gt[:, :2] = 1.0
        pred = np.zeros((4, 4))
        pred[:2, :2] = 1.0
        np.testing.assert_allclose(f_measure(pred, gt), 0.8125, atol=1e-12)

    def test_empty_gt_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            f_measure(np.ones((4, 4)), np.zeros((4, 4)))

    def test_adaptive_threshold_saturates_at_one(self):
        gt = np.ones((4, 4))
        pred = np.full((4, 4), 0.9)  # threshold = min(1.8, 1) = 1 -> binarized >= 1
        assert f_measure(pred, gt) == 0.0


class TestReport:
    def test_means_and_csv(self):
        rng = np.random.default_rng(3)
        report = MetricsReport()
        gt = (rng.random((8, 8)) > 0.5).astype(float)
        report.add("a.pgm", gt, gt)
        report.add("b.pgm", 1.0 - gt, gt)
        assert report.mean_mae == 0.5
        rows = list(report.csv_rows())
        assert rows[0] == ["name", "mae", "f_measure"]
        assert rows[-1][0] == "MEAN"
        assert len(rows) == 4

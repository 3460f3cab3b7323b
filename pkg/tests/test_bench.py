"""Benchmark harness mechanics on a small grid (the full complexity claim
runs in the acceptance suite)."""

import numpy as np
import pytest

from fmnet.bench import BenchReport, bench_attention_scaling


class TestHarness:
    def test_report_structure_small_grid(self):
        report = bench_attention_scaling(kernels=("softmax", "linear"),
                                         grid=(64, 128, 256), d=16, d_h=8,
                                         reps=3, warmups=1)
        assert report.grid == [64, 128, 256]
        for kern in ("softmax", "linear"):
            assert len(report.medians[kern]) == 3
            assert all(t > 0 for t in report.medians[kern])
            assert kern in report.slopes
        rows = list(report.csv_rows())
        assert rows[0] == ["kernel", "n", "median_seconds", "reps"]
        assert len(rows) == 1 + 2 * 3 + 2  # header + 3 rows/kernel + slope rows

    def test_grid_validation(self):
        with pytest.raises(ValueError, match="4x"):
            bench_attention_scaling(grid=(64, 96, 128))
        with pytest.raises(ValueError, match="4x"):
            bench_attention_scaling(grid=(64, 256))

    def test_unknown_kernel_rejected(self):
        with pytest.raises(ValueError, match="unknown kernel"):
            bench_attention_scaling(kernels=("softmax", "fancy"), grid=(64, 128, 256))

    def test_ratio_helper(self):
        report = BenchReport(kernels=["x"], grid=[10, 20], reps=1,
                             medians={"x": [1.0, 3.0]}, slopes={"x": 1.58})
        assert report.ratio("x", 10, 20) == 3.0

    def test_mlla_needs_square_token_count(self):
        with pytest.raises(ValueError, match="square token count"):
            bench_attention_scaling(kernels=("mlla",), grid=(60, 120, 240),
                                    d=16, d_h=8, reps=1, warmups=0)

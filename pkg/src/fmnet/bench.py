"""Wall-time scaling benchmark for the attention kernels.

Softmax attention should scale quadratically in the token count; the linear
and Mamba-like variants should scale linearly. Medians over repeated runs
(after warmups) are fitted with a log-log slope per kernel.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .attention import RopeConfig, linear_attention_parallel, mlla_attention, softmax_attention
from .tensor import Tensor, no_grad

MIN_TIMER_TICKS = 50


@dataclass
class BenchReport:
    kernels: list = field(default_factory=list)
    grid: list = field(default_factory=list)
    reps: int = 5
    medians: dict = field(default_factory=dict)   # kernel -> [seconds per N]
    slopes: dict = field(default_factory=dict)    # kernel -> fitted log-log slope

    def ratio(self, kernel: str, n_small: int, n_large: int) -> float:
        i, j = self.grid.index(n_small), self.grid.index(n_large)
        return self.medians[kernel][j] / self.medians[kernel][i]

    def csv_rows(self):
        yield ["kernel", "n", "median_seconds", "reps"]
        for kern in self.kernels:
            for n, t in zip(self.grid, self.medians[kern]):
                yield [kern, str(n), f"{t:.6f}", str(self.reps)]
        for kern in self.kernels:
            yield [kern, "slope", f"{self.slopes[kern]:.4f}", str(self.reps)]


def _kernel_runner(name: str, d: int, d_h: int, rng: np.random.Generator):
    heads = d // d_h

    def make_inputs(n):
        q = Tensor(rng.normal(size=(n, d)))
        k = Tensor(rng.normal(size=(n, d)))
        v = Tensor(rng.normal(size=(n, d)))
        return q, k, v

    if name == "softmax":
        return make_inputs, lambda q, k, v: softmax_attention(q, k, v, heads=heads)
    if name == "linear":
        return make_inputs, lambda q, k, v: linear_attention_parallel(q, k, v, heads=heads)
    if name == "mlla":
        w_l = Tensor(rng.normal(size=(d, d)) / np.sqrt(d))
        dw = Tensor(rng.normal(size=(d, 1, 3, 3)))
        rope = RopeConfig(dim=d_h)

        def run(q, k, v):
            n = q.shape[0]
            h = 1 << (n.bit_length() - 1) // 2  # most-square power-of-two split
            while n % h:
                h //= 2
            return mlla_attention(q, k, v, heads=heads, rope_cfg=rope, w_l=w_l,
                                  dw=dw, hw=(h, n // h))

        return make_inputs, run
    raise ValueError(f"unknown kernel {name!r}")


def bench_attention_scaling(kernels=("softmax", "linear", "mlla"),
                            grid=(1024, 2048, 4096), d: int = 64, d_h: int = 16,
                            reps: int = 5, warmups: int = 2, seed: int = 0) -> BenchReport:
    grid = sorted(grid)
    if len(grid) < 3 or grid[-1] < 4 * grid[0]:
        raise ValueError("grid must have >= 3 ascending points spanning >= 4x")
    resolution = time.get_clock_info("perf_counter").resolution
    report = BenchReport(kernels=list(kernels), grid=list(grid), reps=reps)
    rng = np.random.default_rng(seed)
    with no_grad():
        for kern in kernels:
            make_inputs, run = _kernel_runner(kern, d, d_h, rng)
            medians = []
            for n in grid:
                args = make_inputs(n)
                for _ in range(warmups):
                    run(*args)
                times = []
                for _ in range(reps):
                    t0 = time.perf_counter()
                    run(*args)
                    times.append(time.perf_counter() - t0)
                med = float(np.median(times))
                if med < MIN_TIMER_TICKS * resolution:
                    raise RuntimeError(
                        f"timer resolution too coarse for {kern} at N={n}: "
                        f"median {med:.2e}s < {MIN_TIMER_TICKS} ticks; increase work"
                    )
                medians.append(med)
            report.medians[kern] = medians
            report.slopes[kern] = float(
                np.polyfit(np.log(grid), np.log(medians), 1)[0]
            )
    return report

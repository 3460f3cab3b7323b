"""Central finite-difference validation of reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor, no_grad


@dataclass
class GradCheckReport:
    """Outcome of one analytic-vs-numeric gradient comparison."""

    name: str
    max_rel_err: float
    worst_coord: tuple = ()
    n_coords: int = 0
    tol: float = 1e-3
    passed: bool = True

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return (f"gradcheck {self.name:<40s} rel_err={self.max_rel_err:.3e} "
                f"(tol {self.tol:.0e}, {self.n_coords} coords) {status}")


def numeric_gradient(fn, leaf: Tensor, h: float = 1e-4, coords=None) -> np.ndarray:
    """Central differences of the scalar fn() with respect to leaf.data.

    fn must re-run the forward pass reading the current leaf.data. Returns a
    dense gradient array; entries outside `coords` (flat indices) stay zero.
    """
    base = leaf.data
    grad = np.zeros_like(base)
    flat = base.reshape(-1)
    gflat = grad.reshape(-1)
    idx = range(flat.size) if coords is None else coords
    with no_grad():
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(fn().data)
            flat[i] = orig - h
            f_minus = float(fn().data)
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def check_gradients(fn, leaves, name: str = "", h: float = 1e-4, tol: float = 1e-3,
                    atol: float = 1e-7, max_coords: int | None = None,
                    rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare analytic gradients of scalar fn() against central differences.

    leaves: list of (label, Tensor) pairs; each tensor must have
    requires_grad=True. When max_coords is given, a random subset of
    coordinates per leaf is checked (central differences cost two forward
    passes per coordinate).
    """
    for _, leaf in leaves:
        leaf.zero_grad()
    loss = fn()
    loss.backward()

    worst = 0.0
    worst_coord = ()
    total = 0
    for label, leaf in leaves:
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
        coords = None
        n = leaf.data.size
        if max_coords is not None and n > max_coords:
            gen = rng if rng is not None else np.random.default_rng(0)
            coords = gen.choice(n, size=max_coords, replace=False)
            n = max_coords
        numeric = numeric_gradient(fn, leaf, h=h, coords=coords)
        total += n
        sel = range(leaf.data.size) if coords is None else coords
        a_flat = analytic.reshape(-1)
        n_flat = numeric.reshape(-1)
        for i in sel:
            denom = max(abs(a_flat[i]), abs(n_flat[i]), atol / tol)
            rel = abs(a_flat[i] - n_flat[i]) / denom
            if rel > worst:
                worst = rel
                worst_coord = (label, int(i))
    return GradCheckReport(name=name, max_rel_err=worst, worst_coord=worst_coord,
                           n_coords=total, tol=tol, passed=worst < tol)

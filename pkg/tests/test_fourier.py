"""Fourier transforms against the naive double-loop DFT and exact identities."""

import numpy as np
import pytest

from fmnet.fourier import ComplexTensor, fft2, ifft2, magnitude
from fmnet.tensor import Tensor, tsum


def naive_dft2(x):
    """O(N^2) double-loop 2-D DFT (the independent oracle)."""
    x = np.asarray(x, dtype=complex)
    h, w = x.shape[-2:]
    out = np.zeros_like(x)
    for u in range(h):
        for v in range(w):
            acc = 0.0 + 0.0j
            for i in range(h):
                for j in range(w):
                    acc += x[..., i, j] * np.exp(-2j * np.pi * (u * i / h + v * j / w))
            out[..., u, v] = acc
    return out


class TestForward:
    def test_zeros(self):
        spec = fft2(Tensor(np.zeros((3, 4, 4))))
        assert np.all(spec.re.data == 0.0) and np.all(spec.im.data == 0.0)

    def test_unit_impulse_2x2(self):
        x = np.zeros((2, 2))
        x[0, 0] = 1.0
        spec = fft2(Tensor(x))
        np.testing.assert_array_equal(spec.re.data, np.ones((2, 2)))
        np.testing.assert_array_equal(spec.im.data, np.zeros((2, 2)))

    @pytest.mark.parametrize("h,w", [(8, 8), (4, 8), (3, 5), (6, 7), (16, 16), (1, 4)])
    def test_matches_naive_dft(self, h, w):
        rng = np.random.default_rng(h * 100 + w)
        x = rng.normal(size=(h, w))
        spec = fft2(Tensor(x)).to_numpy()
        np.testing.assert_allclose(spec, naive_dft2(x), atol=1e-9)

    def test_complex_input_matches_naive(self):
        rng = np.random.default_rng(5)
        re, im = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
        spec = fft2(ComplexTensor(Tensor(re), Tensor(im))).to_numpy()
        np.testing.assert_allclose(spec, naive_dft2(re + 1j * im), atol=1e-9)

    def test_conjugate_symmetry_for_real_input(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(6, 8))
        spec = fft2(Tensor(x)).to_numpy()
        h, w = x.shape
        for u in range(h):
            for v in range(w):
                np.testing.assert_allclose(
                    spec[u, v], np.conj(spec[(-u) % h, (-v) % w]), atol=1e-10)

    def test_rank_guard(self):
        with pytest.raises(ValueError, match="at least 2"):
            fft2(Tensor(np.zeros(4)))


class TestInverse:
    @pytest.mark.parametrize("h,w", [(1, 1), (2, 2), (5, 3), (8, 8), (16, 12), (32, 32)])
    def test_round_trip(self, h, w):
        rng = np.random.default_rng(h * 37 + w)
        x = rng.normal(size=(2, h, w))
        back = ifft2(fft2(Tensor(x)))
        assert np.abs(back.re.data - x).max() < 1e-9
        assert np.abs(back.im.data).max() < 1e-9

    def test_constant_plane_dc_only(self):
        c = 2.5
        spec = fft2(Tensor(np.full((4, 4), c))).to_numpy()
        expected = np.zeros((4, 4), complex)
        expected[0, 0] = c * 16
        np.testing.assert_allclose(spec, expected, atol=1e-12)
        back = ifft2(fft2(Tensor(np.full((4, 4), c))))
        np.testing.assert_allclose(back.re.data, c, atol=1e-12)

    def test_conjugate_symmetric_spectrum_gives_real_output(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(8, 8))
        spec = fft2(Tensor(x))  # conjugate-symmetric by construction
        out = ifft2(spec)
        assert np.abs(out.im.data).max() < 1e-9


class TestProperties:
    def test_linearity(self):
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=(8, 8)), rng.normal(size=(8, 8))
        a, b = 2.3, -0.7
        lhs = fft2(Tensor(a * x + b * y)).to_numpy()
        rhs = a * fft2(Tensor(x)).to_numpy() + b * fft2(Tensor(y)).to_numpy()
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    @pytest.mark.parametrize("h,w", [(8, 8), (5, 7), (16, 16)])
    def test_parseval(self, h, w):
        rng = np.random.default_rng(h + w)
        x = rng.normal(size=(h, w))
        spec = fft2(Tensor(x)).to_numpy()
        space = np.sum(x * x)
        freq = np.sum(np.abs(spec) ** 2) / (h * w)
        assert abs(space - freq) / space < 1e-9

    def test_round_trip_all_sizes_up_to_32(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        for h in range(1, 33, 3):
            for w in range(1, 33, 5):
                x = rng.normal(size=(h, w))
                back = ifft2(fft2(Tensor(x)))
                worst = max(worst,
                            np.abs(back.re.data - x).max(),
                            np.abs(back.im.data).max())
        assert worst < 1e-9


class TestMagnitude:
    def test_values(self):
        z = ComplexTensor(Tensor(np.array([3.0, 0.0])), Tensor(np.array([4.0, 0.0])))
        np.testing.assert_array_equal(magnitude(z).data, [5.0, 0.0])

    def test_zero_subgradient(self):
        re = Tensor(np.array([0.0, 1.0]), requires_grad=True)
        im = Tensor(np.array([0.0, 1.0]), requires_grad=True)
        tsum(magnitude(ComplexTensor(re, im))).backward()
        assert re.grad[0] == 0.0 and im.grad[0] == 0.0
        np.testing.assert_allclose(re.grad[1], 1 / np.sqrt(2))


class TestComplexAlgebra:
    def test_mul_matches_numpy(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        ca = ComplexTensor(Tensor(a.real), Tensor(a.imag))
        cb = ComplexTensor(Tensor(b.real), Tensor(b.imag))
        np.testing.assert_allclose((ca * cb).to_numpy(), a * b, atol=1e-12)
        np.testing.assert_allclose((ca @ cb).to_numpy(), a @ b, atol=1e-12)
        np.testing.assert_allclose(ca.conj().to_numpy(), np.conj(a))

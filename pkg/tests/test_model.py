"""Model assembly: stride contracts, determinism, parameter-count oracle."""

import numpy as np
import pytest

from fmnet.losses import pyramid_loss
from fmnet.model import Encoder, FMNet, ModelConfig
from fmnet.tensor import Tensor, no_grad

TEST_CFG = ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                       pfae_reduced=8, mfm_heads=1, seed=3)


def count_params_oracle(cfg: ModelConfig) -> int:
    """Layer-by-layer analytic parameter count, independent of the modules."""
    widths = cfg.encoder_widths
    r = cfg.pfae_reduced

    def conv(cin, cout, k, groups=1, bias=True):
        return cout * (cin // groups) * k * k + (cout if bias else 0)

    def norm(c):
        return 2 * c

    def fwm(c):
        return conv(c, c, 1) + norm(c) + conv(c, c, 1)

    total = 0
    # encoder: stage i = two convs + two batch norms
    cin = 3
    for i, c in enumerate(widths):
        total += conv(cin, c, 3) + norm(c) + conv(c, c, 3) + norm(c)
        cin = c
    # pfae: reduce, 4 branches (3x3 conv + 1x1 proj + fwm + 2r->r fuse), merge, out
    total += conv(widths[3], r, 1)
    total += 4 * (conv(r, r, 3) + conv(r, r, 1) + fwm(r) + conv(2 * r, r, 1))
    total += conv(4 * r, r, 1) + conv(r, r, 3)
    # mfm per level
    for c in widths:
        half = c // 2
        total += c * 1 * 3 * 3  # input cpe depthwise kernel (no bias)
        total += norm(c)        # input layer norm
        for _k in cfg.mfm_kernels:  # two scale branches
            total += conv(half, half, 1)            # pointwise proj
            total += conv(half, half, _k, groups=half)  # depthwise
            total += 2 * (half * half + half)       # q/k linear maps
            total += half * half                    # lepe channel matrix
            total += half * 1 * 3 * 3               # lepe depthwise kernel
        total += conv(c, c, 1)                      # gate
        total += c * c + c                          # output linear
        total += fwm(c)                             # fwm on the block input
        total += c * 1 * 3 * 3                      # mid cpe kernel
        total += conv(c, cfg.mlp_ratio * c, 1) + conv(cfg.mlp_ratio * c, c, 1)
        total += norm(c)                            # output layer norm
        total += fwm(c)                             # fwm on the block output
    # frd per level
    for i, c in enumerate(widths):
        aux = ([widths[i + 1]] if i < 3 else [r]) if cfg.frd_immediate_only \
            else [widths[j] for j in range(i + 1, 4)] + [r]
        total += sum(conv(ca, c, 1) for ca in aux)
        total += conv(c, c, 3) + norm(c)
        total += conv((2 + len(aux)) * c, c, 3)
    # heads
    for c in widths:
        total += conv(c, 1, 1)
    total += conv(r, 1, 1)
    return total


class TestEncoder:
    def test_stride_contract_64(self):
        enc = Encoder((4, 8, 12, 16), np.random.default_rng(0))
        feats = enc(Tensor(np.zeros((1, 3, 64, 64))))
        assert [f.shape[2] for f in feats] == [16, 8, 4, 2]
        assert [f.shape[1] for f in feats] == [4, 8, 12, 16]

    def test_indivisible_input_rejected(self):
        enc = Encoder((4, 8, 12, 16), np.random.default_rng(0))
        with pytest.raises(ValueError, match="divisible"):
            enc(Tensor(np.zeros((1, 3, 60, 64))))

    def test_seeded_init_is_bit_identical(self):
        a = Encoder((4, 8, 12, 16), np.random.default_rng(12))
        b = Encoder((4, 8, 12, 16), np.random.default_rng(12))
        for (na, pa), (nb, pb) in zip(a.named_params(), b.named_params()):
            assert na == nb
            np.testing.assert_array_equal(pa.data, pb.data)


class TestFmnet:
    def test_logit_shapes(self):
        model = FMNet(TEST_CFG)
        rng = np.random.default_rng(0)
        with no_grad():
            pyr = model(Tensor(rng.normal(size=(2, 3, 64, 64))))
        assert len(pyr.logits) == 5
        for logits in pyr.logits:
            assert logits.shape == (2, 1, 64, 64)
        assert [e.shape[2] for e in pyr.encoder] == [16, 8, 4, 2]
        assert pyr.e5.shape == (2, 8, 2, 2)
        for f, e in zip(pyr.refined, pyr.encoder):
            assert f.shape == e.shape
        for g, f in zip(pyr.decoded, pyr.refined):
            assert g.shape == f.shape

    def test_parameter_count_matches_oracle(self):
        for cfg in (TEST_CFG, ModelConfig(),
                    ModelConfig(frd_immediate_only=True, encoder_widths=(4, 8, 12, 16),
                                pfae_reduced=8, mfm_heads=1)):
            model = FMNet(cfg)
            assert model.num_params() == count_params_oracle(cfg)

    def test_construction_deterministic(self):
        a, b = FMNet(TEST_CFG), FMNet(TEST_CFG)
        for (na, pa), (nb, pb) in zip(a.named_params(), b.named_params()):
            assert na == nb
            np.testing.assert_array_equal(pa.data, pb.data)

    def test_forward_deterministic(self):
        model = FMNet(TEST_CFG)
        rng = np.random.default_rng(1)
        img = Tensor(rng.normal(size=(1, 3, 64, 64)))
        with no_grad():
            a = model(img).logits
            b = model(img).logits
        for la, lb in zip(a, b):
            np.testing.assert_array_equal(la.data, lb.data)

    def test_loss_invariant_to_batch_order(self):
        model = FMNet(TEST_CFG)
        rng = np.random.default_rng(2)
        img = rng.normal(size=(4, 3, 64, 64))
        gt = (rng.random((4, 1, 64, 64)) > 0.5).astype(float)
        perm = np.array([2, 0, 3, 1])
        with no_grad():
            base = pyramid_loss(model(Tensor(img)).logits, Tensor(gt)).item()
            swapped = pyramid_loss(model(Tensor(img[perm])).logits,
                                   Tensor(gt[perm])).item()
        assert abs(base - swapped) < 1e-10

    def test_immediate_only_variant_runs(self):
        cfg = ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                          pfae_reduced=8, mfm_heads=1, frd_immediate_only=True)
        model = FMNet(cfg)
        with no_grad():
            pyr = model(Tensor(np.random.default_rng(3).normal(size=(1, 3, 64, 64))))
        assert pyr.logits[0].shape == (1, 1, 64, 64)

    def test_bad_input_size_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            ModelConfig(input_hw=(60, 64))

"""Gradient-check and equivalence suites shared by the CLI and the tests.

Primitive checks compare every coordinate against central differences on
small tensors; composite-block checks cover every parameter once at the
canonical seed and a random coordinate sample per extra seed (two forward
passes per coordinate make full coverage at every seed needlessly slow).
"""

from __future__ import annotations

import numpy as np

from .attention import (
    RopeConfig,
    SSMParams,
    cpe,
    lepe,
    linear_attention_numerator,
    linear_attention_parallel,
    linear_attention_recurrent,
    mlla_attention,
    rope_encode,
    softmax_attention,
    ssm_scan,
)
from .blocks import Frd, Mfm, MfmConfig, Pfae, PfaeConfig, PredictionHead
from .fourier import fft2, ifft2, magnitude
from .frequency import FwmParams, complex_softmax, freq_transpose_attention, fwm
from .gradcheck import GradCheckReport, check_gradients
from .losses import pyramid_loss, weighted_bce, weighted_iou
from .model import FMNet, ModelConfig
from .nn_ops import avg_pool2d, bilinear_resize, conv2d, normalize
from .tensor import (
    Tensor,
    activation,
    cumsum,
    matmul,
    softmax_lastdim,
    tsum,
)

TINY_MODEL = ModelConfig(input_hw=(64, 64), encoder_widths=(4, 8, 12, 16),
                         pfae_reduced=8, mfm_heads=1, seed=7)


def _weighted_sum(out, rng):
    m = Tensor(rng.normal(size=out.shape))
    return tsum(out * m)


def primitive_checks(seed: int) -> list[GradCheckReport]:
    """Every differentiable primitive against central differences."""
    rng = np.random.default_rng(seed)
    reports = []

    def check(name, fn, leaves, tol=1e-3):
        reports.append(check_gradients(fn, leaves, name=name, tol=tol))

    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    y = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    m = Tensor(rng.normal(size=(3, 4)))
    check("add", lambda: tsum((x + y) * m), [("x", x), ("y", y)])
    check("mul", lambda: tsum(x * y * m), [("x", x), ("y", y)])
    check("div", lambda: tsum((x / (y * y + 1.0)) * m), [("x", x), ("y", y)])
    check("pow", lambda: tsum((x * x) * m), [("x", x)])
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
    mm = Tensor(rng.normal(size=(3, 5)))
    check("matmul", lambda: tsum(matmul(a, b) * mm), [("a", a), ("b", b)])
    for kind in ("sigmoid", "gelu", "silu", "elu_plus_one", "relu", "softmax_lastdim"):
        z = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
        zm = Tensor(rng.normal(size=(4, 6)))
        check(f"activation[{kind}]", lambda z=z, zm=zm, kind=kind:
              tsum(activation(z, kind) * zm), [("x", z)])
    c = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
    cm = Tensor(rng.normal(size=(2, 3, 4)))
    check("cumsum", lambda: tsum(cumsum(c, 1) * cm), [("x", c)])

    xc = Tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
    wc = Tensor(rng.normal(size=(3, 2, 3, 3)), requires_grad=True)
    bc = Tensor(rng.normal(size=3), requires_grad=True)
    mc = Tensor(rng.normal(size=(1, 3, 4, 4)))
    check("conv2d", lambda: tsum(conv2d(xc, wc, bc, padding=1) * mc),
          [("x", xc), ("w", wc), ("b", bc)])
    xd = Tensor(rng.normal(size=(1, 4, 4, 4)), requires_grad=True)
    wd = Tensor(rng.normal(size=(4, 1, 3, 3)), requires_grad=True)
    md = Tensor(rng.normal(size=(1, 4, 2, 2)))
    check("conv2d[depthwise,dilated,strided]",
          lambda: tsum(conv2d(xd, wd, None, stride=2, dilation=1, groups=4, padding=1) * md),
          [("x", xd), ("w", wd)])

    xb = Tensor(rng.normal(size=(1, 2, 3, 5)), requires_grad=True)
    mb = Tensor(rng.normal(size=(1, 2, 5, 7)))
    check("bilinear_resize", lambda: tsum(bilinear_resize(xb, 5, 7) * mb), [("x", xb)])
    xa = Tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
    ma = Tensor(rng.normal(size=(1, 2, 4, 4)))
    check("avg_pool2d", lambda: tsum(avg_pool2d(xa, 3) * ma), [("x", xa)])

    for kind in ("layer", "batch"):
        xn = Tensor(rng.normal(size=(2, 3, 2, 2)), requires_grad=True)
        gn = Tensor(rng.normal(size=3), requires_grad=True)
        bn = Tensor(rng.normal(size=3), requires_grad=True)
        mn = Tensor(rng.normal(size=(2, 3, 2, 2)))
        check(f"normalize[{kind}]", lambda xn=xn, gn=gn, bn=bn, mn=mn, kind=kind:
              tsum(normalize(xn, kind, gn, bn) * mn),
              [("x", xn), ("gamma", gn), ("beta", bn)])

    xf = Tensor(rng.normal(size=(2, 4, 4)), requires_grad=True)
    mf = Tensor(rng.normal(size=(2, 4, 4)))
    check("fft2+magnitude", lambda: tsum(magnitude(fft2(xf)) * mf), [("x", xf)])
    check("ifft2(fft2)", lambda: tsum(ifft2(fft2(xf)).re * mf), [("x", xf)])

    from .fourier import ComplexTensor
    xr = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    xi = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    ms = Tensor(rng.normal(size=(3, 3)))
    check("complex_softmax", lambda: tsum(
        (complex_softmax(ComplexTensor(xr, xi)).map * ComplexTensor(ms, ms)).re),
        [("re", xr), ("im", xi)])
    return reports


def attention_checks(seed: int) -> list[GradCheckReport]:
    rng = np.random.default_rng(seed)
    reports = []

    def check(name, fn, leaves, tol=1e-3):
        reports.append(check_gradients(fn, leaves, name=name, tol=tol))

    n, d = 6, 4
    q = Tensor(rng.normal(size=(n, d)), requires_grad=True)
    k = Tensor(rng.normal(size=(n, d)), requires_grad=True)
    v = Tensor(rng.normal(size=(n, d)), requires_grad=True)
    m = Tensor(rng.normal(size=(n, d)))
    check("softmax_attention", lambda: tsum(softmax_attention(q, k, v, heads=2) * m),
          [("q", q), ("k", k), ("v", v)])
    check("linear_attention_parallel",
          lambda: tsum(linear_attention_parallel(q, k, v, heads=2) * m),
          [("q", q), ("k", k), ("v", v)])
    check("linear_attention_causal",
          lambda: tsum(linear_attention_parallel(q, k, v, heads=2, causal=True) * m),
          [("q", q), ("k", k), ("v", v)])
    check("linear_attention_recurrent",
          lambda: tsum(linear_attention_recurrent(q, k, v, heads=2) * m),
          [("q", q), ("k", k), ("v", v)])

    cfg = RopeConfig(dim=d)
    check("rope_encode", lambda: tsum(rope_encode(q, cfg) * m), [("x", q)])

    sp = SSMParams(
        a_tilde=Tensor(rng.uniform(0, 1, (4, 3)), requires_grad=True),
        b=Tensor(rng.normal(size=(4, 3)), requires_grad=True),
        c=Tensor(rng.normal(size=(4, 3)), requires_grad=True),
        delta=Tensor(rng.normal(size=(4, 2)), requires_grad=True),
        d_skip=Tensor(rng.normal(size=2), requires_grad=True),
        x=Tensor(rng.normal(size=(4, 2)), requires_grad=True),
    )
    ms = Tensor(rng.normal(size=(4, 2)))
    check("ssm_scan", lambda: tsum(ssm_scan(sp) * ms),
          [("a", sp.a_tilde), ("b", sp.b), ("c", sp.c), ("delta", sp.delta),
           ("d", sp.d_skip), ("x", sp.x)])

    vm = Tensor(rng.normal(size=(1, 3, 4, 4)), requires_grad=True)
    wl = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    dw = Tensor(rng.normal(size=(3, 1, 3, 3)), requires_grad=True)
    mm = Tensor(rng.normal(size=(1, 3, 4, 4)))
    check("lepe", lambda: tsum(lepe(vm, wl, dw) * mm), [("v", vm), ("wl", wl), ("dw", dw)])
    check("cpe", lambda: tsum(cpe(vm, dw) * mm), [("x", vm), ("dw", dw)])

    q2 = Tensor(rng.normal(size=(16, 4)), requires_grad=True)
    k2 = Tensor(rng.normal(size=(16, 4)), requires_grad=True)
    v2 = Tensor(rng.normal(size=(16, 4)), requires_grad=True)
    wl2 = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
    dw2 = Tensor(rng.normal(size=(4, 1, 3, 3)), requires_grad=True)
    m2 = Tensor(rng.normal(size=(16, 4)))
    check("mlla_attention", lambda: tsum(
        mlla_attention(q2, k2, v2, heads=2, rope_cfg=RopeConfig(dim=2),
                       w_l=wl2, dw=dw2, hw=(4, 4)) * m2),
        [("q", q2), ("k", k2), ("v", v2), ("wl", wl2), ("dw", dw2)])

    xw = Tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
    fp = FwmParams.init(2, rng)
    mw = Tensor(rng.normal(size=(1, 2, 4, 4)))
    check("fwm", lambda: tsum(fwm(xw, fp) * mw),
          [("x", xw)] + [(n2, t) for n2, t in
                          zip("w1 b1 g b w2 b2".split(),
                              (fp.w1, fp.b1, fp.bn_gamma, fp.bn_beta, fp.w2, fp.b2))])
    check("freq_transpose_attention",
          lambda: tsum(freq_transpose_attention(xw) * mw), [("x", xw)])
    return reports


def block_checks(seed: int, full_coverage: bool | None = None,
                 sample: int = 40) -> list[GradCheckReport]:
    """Composite blocks + losses; full parameter coverage at the canonical seed.

    Composite blocks are differenced at h=1e-6: their recurrent branches
    amplify the perturbation enough that a coarser step can cross a relu kink
    or a spectrum-magnitude cone, which invalidates the finite-difference
    value, not the analytic gradient (double precision keeps the rounding
    error of the h=1e-6 quotient near 1e-9).
    """
    if full_coverage is None:
        full_coverage = seed == 0
    rng = np.random.default_rng(seed)
    max_coords = None if full_coverage else sample
    reports = []

    def check(name, fn, leaves, tol=1e-3, h=1e-4):
        reports.append(check_gradients(fn, leaves, name=name, tol=tol, h=h,
                                       max_coords=max_coords, rng=rng))

    pfae = Pfae(PfaeConfig(in_channels=4, reduced_channels=4), np.random.default_rng(seed + 1))
    xe = Tensor(rng.normal(size=(1, 4, 4, 4)), requires_grad=True)
    me = Tensor(rng.normal(size=(1, 4, 4, 4)))
    check("block[pfae]", lambda: tsum(pfae(xe) * me),
          [("x", xe)] + pfae.named_params(), h=1e-6)

    mfm = Mfm(MfmConfig(channels=8, heads=2), np.random.default_rng(seed + 2))
    xm = Tensor(rng.normal(size=(1, 8, 8, 8)), requires_grad=True)
    mm = Tensor(rng.normal(size=(1, 8, 8, 8)))
    check("block[mfm]", lambda: tsum(mfm(xm) * mm),
          [("x", xm)] + mfm.named_params(), h=1e-6)

    frd = Frd(4, [6, 4], np.random.default_rng(seed + 3))
    xf = Tensor(rng.normal(size=(1, 4, 8, 8)), requires_grad=True)
    a1 = Tensor(rng.normal(size=(1, 6, 4, 4)), requires_grad=True)
    a2 = Tensor(rng.normal(size=(1, 4, 4, 4)), requires_grad=True)
    mf = Tensor(rng.normal(size=(1, 4, 8, 8)))
    check("block[frd]", lambda: tsum(frd(xf, [a1, a2]) * mf),
          [("f", xf), ("a1", a1), ("a2", a2)] + frd.named_params(), h=1e-6)

    head = PredictionHead(4, np.random.default_rng(seed + 4))
    xh = Tensor(rng.normal(size=(1, 4, 4, 4)), requires_grad=True)
    mh = Tensor(rng.normal(size=(1, 1, 8, 8)))
    check("block[prediction_head]", lambda: tsum(head(xh, (8, 8)) * mh),
          [("x", xh)] + head.named_params())

    logits = Tensor(rng.normal(size=(1, 1, 8, 8)), requires_grad=True)
    gt = Tensor((rng.random((1, 1, 8, 8)) > 0.5).astype(float))
    check("loss[weighted_bce]", lambda: weighted_bce(logits, gt), [("logits", logits)])
    check("loss[weighted_iou]", lambda: weighted_iou(logits, gt), [("logits", logits)])
    levels = [Tensor(rng.normal(size=(1, 1, 8, 8)), requires_grad=True) for _ in range(5)]
    check("loss[pyramid]", lambda: pyramid_loss(levels, gt),
          [(f"level{i}", l) for i, l in enumerate(levels)])
    return reports


def model_sample_check(seed: int, n_params: int = 10) -> GradCheckReport:
    """Full-model gradients on a random parameter sample (looser tolerance:
    depth compounds rounding)."""
    rng = np.random.default_rng(seed)
    model = FMNet(TINY_MODEL)
    h, w = TINY_MODEL.input_hw
    img = Tensor(rng.normal(size=(1, 3, h, w)) * 0.3 + 0.5)
    gt = Tensor((rng.random((1, 1, h, w)) > 0.5).astype(float))
    named = model.named_params()
    picks = rng.choice(len(named), size=min(n_params, len(named)), replace=False)
    leaves = []
    for idx in picks:
        name, tensor = named[idx]
        leaves.append((name, tensor))
    return check_gradients(lambda: pyramid_loss(model(img).logits, gt), leaves,
                           name="model[10-param sample]", tol=1e-2, h=1e-6,
                           max_coords=1, rng=rng)


def encoder_stage_check(seed: int) -> GradCheckReport:
    rng = np.random.default_rng(seed)
    model = FMNet(TINY_MODEL)
    stage = model.encoder.stages[0]
    x = Tensor(rng.normal(size=(1, 3, 32, 32)), requires_grad=True)
    m = Tensor(rng.normal(size=(1, 4, 8, 8)))
    return check_gradients(lambda: tsum(stage(x) * m),
                           [("x", x)] + stage.named_params(),
                           name="encoder[stage1]", h=1e-6, max_coords=60,
                           rng=np.random.default_rng(seed))


def gradcheck_suite(module: str = "all", seed: int = 0) -> list[GradCheckReport]:
    reports = []
    if module in ("all", "primitives"):
        reports.extend(primitive_checks(seed))
    if module in ("all", "attention"):
        reports.extend(attention_checks(seed))
    if module in ("all", "blocks"):
        reports.extend(block_checks(seed))
    if module in ("all", "model"):
        reports.append(encoder_stage_check(seed))
        reports.append(model_sample_check(seed))
    if not reports:
        raise ValueError(f"unknown gradcheck module {module!r}")
    return reports


# -- equivalence oracles ------------------------------------------------------------


def equivalence_suite(seeds=range(10), n: int = 32, d: int = 8, heads: int = 2) -> dict:
    """Max deviations of the attention-form equivalences over several seeds."""
    worst_rec = 0.0
    worst_ssm = 0.0
    worst_last = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        q = Tensor(rng.normal(size=(n, d)))
        k = Tensor(rng.normal(size=(n, d)))
        v = Tensor(rng.normal(size=(n, d)))
        rec = linear_attention_recurrent(q, k, v, heads=heads)
        par = linear_attention_parallel(q, k, v, heads=heads, causal=True)
        worst_rec = max(worst_rec, float(np.abs(rec.data - par.data).max()))
        full = linear_attention_parallel(q, k, v, heads=heads, causal=False)
        worst_last = max(worst_last, float(np.abs(rec.data[-1] - full.data[-1]).max()))

        dh = d  # single-head correspondence on raw values
        p = SSMParams(
            a_tilde=Tensor(np.ones((n, dh))),
            b=k,
            c=q,
            delta=Tensor(np.ones((n, dh))),
            d_skip=Tensor(np.zeros(dh)),
            x=v,
        )
        scan = ssm_scan(p)
        numer = linear_attention_numerator(q, k, v, heads=1, phi="identity", causal=True)
        worst_ssm = max(worst_ssm, float(np.abs(scan.data - numer.data).max()))
    return {
        "recurrent_vs_causal_parallel": worst_rec,
        "recurrent_last_vs_full_parallel": worst_last,
        "ssm_vs_linear_numerator": worst_ssm,
    }

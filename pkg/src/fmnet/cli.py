"""Command-line surface: verification suites, benchmarks, data generation,
training, inference, and mask evaluation.

Every subcommand prints machine-readable lines (or writes CSV) plus a short
human summary, and exits 0 only if all asserted checks pass.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from .bench import bench_attention_scaling
from .config import RunConfig, config_as_dict, from_dict, load_toml, to_toml
from .fileio import (
    load_checkpoint,
    read_pgm,
    read_ppm,
    restore_model,
    save_checkpoint,
    write_pgm,
    write_ppm,
)
from .metrics import MetricsReport
from .model import FMNet, ModelConfig
from .synth import SynthConfig, make_dataset
from .train import LrSchedule, predict_mask, train_overfit

EQUIV_TOL = 1e-10


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def cmd_gradcheck(args) -> int:
    t0 = time.perf_counter()
    reports = checks.gradcheck_suite(args.module, seed=args.seed)
    for rep in reports:
        print(rep.line())
    n_bad = sum(not r.passed for r in reports)
    print(f"gradcheck summary: {len(reports) - n_bad}/{len(reports)} passed "
          f"in {time.perf_counter() - t0:.1f}s (module={args.module}, seed={args.seed})")
    return 1 if n_bad else 0


def cmd_equiv(args) -> int:
    devs = checks.equivalence_suite(seeds=range(args.seeds))
    ok = True
    for name, dev in devs.items():
        passed = dev < EQUIV_TOL
        ok &= passed
        print(f"equiv {name:<35s} max_dev={dev:.3e} "
              f"{'ok' if passed else 'FAIL'} (tol {EQUIV_TOL:.0e})")
    print(f"equiv summary: max deviation "
          f"{max(devs.values()):.3e} over {args.seeds} seeds")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    grid = [int(n) for n in args.grid.split(",")]
    report = bench_attention_scaling(grid=grid, reps=args.reps, seed=args.seed)
    for kern in report.kernels:
        times = " ".join(f"{t * 1e3:9.2f}ms" for t in report.medians[kern])
        print(f"bench {kern:<8s} N={report.grid} medians: {times} "
              f"slope={report.slopes[kern]:.2f}")
    gap = report.slopes["softmax"] - report.slopes["linear"]
    print(f"bench slope gap softmax-linear: {gap:.2f}")
    if args.csv:
        _write_csv(args.csv, report.csv_rows())
        print(f"bench CSV written to {args.csv}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = make_dataset(args.n, seed=args.seed, cfg=SynthConfig(size=args.size))
    for i, (img, gt) in enumerate(data):
        write_ppm(out / f"img_{i:03d}.ppm", img)
        write_pgm(out / f"gt_{i:03d}.pgm", gt[0])
    print(f"synth: wrote {args.n} image/mask pairs ({args.size}x{args.size}) to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = load_toml(args.config) if args.config else RunConfig()
    steps = args.steps if args.steps is not None else cfg.train.steps
    model = FMNet(cfg.model)
    data = make_dataset(cfg.train.n_images, seed=cfg.train.data_seed,
                        cfg=SynthConfig(**{**vars(cfg.synth), "size": cfg.model.input_hw[0]}))
    schedule = LrSchedule(base_lr=cfg.train.lr, boundaries=cfg.train.decay_boundaries,
                          factor=cfg.train.decay_factor)
    t0 = time.perf_counter()
    result = train_overfit(model, data, steps=steps, schedule=schedule,
                           log_every=max(1, steps // 20))
    dt = time.perf_counter() - t0
    print(f"train: {steps} steps in {dt:.0f}s; "
          f"loss {result.losses[0]:.4f} -> {result.losses[-1]:.4f}; "
          f"thresholded train MAE {result.final_mae:.4f}")
    if args.out:
        save_checkpoint(args.out, model, config_as_dict(cfg))
        print(f"train: checkpoint written to {args.out}")
    if args.curve:
        _write_csv(args.curve, [["step", "loss"]]
                   + [[str(i), f"{v:.8f}"] for i, v in enumerate(result.losses)])
        print(f"train: loss curve written to {args.curve}")
    return 0


def cmd_infer(args) -> int:
    config_dict, params = load_checkpoint(args.ckpt)
    cfg = from_dict(config_dict)
    model = FMNet(cfg.model)
    restore_model(model, params)
    img = read_ppm(args.input)
    mask = predict_mask(model, img)
    write_pgm(args.output, mask)
    print(f"infer: {args.input} -> {args.output} "
          f"(mask mean {mask.mean():.3f})")
    return 0


def cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    preds = sorted(pred_dir.glob("*.pgm"))
    if not preds:
        print(f"eval: no .pgm files in {pred_dir}", file=sys.stderr)
        return 1
    report = MetricsReport()
    for pred_path in preds:
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            print(f"eval: missing ground truth {gt_path}", file=sys.stderr)
            return 1
        report.add(pred_path.name, read_pgm(pred_path), read_pgm(gt_path))
    for name, m, f in zip(report.names, report.mae_values, report.f_values):
        print(f"eval {name:<20s} mae={m:.6f} f_measure={f:.6f}")
    print(f"eval summary: {len(report.names)} masks, mean MAE {report.mean_mae:.6f}, "
          f"mean F {report.mean_f:.6f} (S-measure/E-measure not implemented; "
          f"MAE and F only)")
    if args.report:
        _write_csv(args.report, report.csv_rows())
        print(f"eval: report written to {args.report}")
    return 0


def cmd_config(args) -> int:
    print(to_toml(RunConfig()), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fmnet", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    g.add_argument("--module", default="all",
                   choices=["all", "primitives", "attention", "blocks", "model"])
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(fn=cmd_gradcheck)

    e = sub.add_parser("equiv", help="attention-form equivalence oracles")
    e.add_argument("--seeds", type=int, default=10)
    e.set_defaults(fn=cmd_equiv)

    b = sub.add_parser("bench", help="attention scaling benchmark")
    b.add_argument("--grid", default="1024,2048,4096")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", default=None)
    b.set_defaults(fn=cmd_bench)

    s = sub.add_parser("synth", help="generate the synthetic camouflage set")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_synth)

    t = sub.add_parser("train", help="deterministic overfit training run")
    t.add_argument("--config", default=None, help="TOML run configuration")
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--out", default=None, help="checkpoint path")
    t.add_argument("--curve", default=None, help="loss-curve CSV path")
    t.set_defaults(fn=cmd_train)

    i = sub.add_parser("infer", help="predict a mask for one PPM image")
    i.add_argument("--ckpt", required=True)
    i.add_argument("--in", dest="input", required=True)
    i.add_argument("--out", dest="output", required=True)
    i.set_defaults(fn=cmd_infer)

    v = sub.add_parser("eval", help="score predicted masks against ground truth")
    v.add_argument("--pred", required=True)
    v.add_argument("--gt", required=True)
    v.add_argument("--report", default=None, help="CSV output path")
    v.set_defaults(fn=cmd_eval)

    c = sub.add_parser("config", help="print the default TOML configuration")
    c.set_defaults(fn=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

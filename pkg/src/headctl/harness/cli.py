"""Command line entry point: ``headctl {run,capture,train,vision,plotdata}``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import HeadctlError
from .config import ExperimentConfig, preset
from .runner import capture_dataset, emit_plot_data, run_experiment, train_network, vision_demo


def _load(args, default_kind: str) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else preset(getattr(args, "kind", None) or default_kind)
    d = cfg.to_dict()
    if getattr(args, "kind", None) and not getattr(args, "config", None):
        d["kind"] = args.kind
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "out", None):
        d["out"] = args.out
    if getattr(args, "sensing", None):
        d["sensing"] = args.sensing
    return ExperimentConfig.from_dict(d)


def _run_one(d: dict) -> dict:
    summary, _ = run_experiment(ExperimentConfig.from_dict(d))
    return summary.to_dict()


def cmd_run(args) -> int:
    cfg = _load(args, "track3dof")
    if args.batch:
        seeds = [int(s) for s in args.batch.split(",")]
        jobs = []
        for s in seeds:
            d = cfg.to_dict()
            d["seed"] = s
            d["out"] = str(Path(cfg.out) / f"seed_{s}")
            jobs.append(d)
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, jobs))
        print(json.dumps(results, indent=2))
        return 0
    summary, _ = run_experiment(cfg)
    print(json.dumps(summary.to_dict(), indent=2))
    return 0


def cmd_capture(args) -> int:
    cfg = _load(args, "excitation_capture")
    if args.duration is not None:
        d = cfg.to_dict()
        d["excitation_duration"] = args.duration
        cfg = ExperimentConfig.from_dict(d)
    rows = capture_dataset(cfg)
    print(f"wrote {len(rows)} rows to {Path(cfg.out) / 'dataset.csv'}")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args, "train_network")
    if args.dataset:
        d = cfg.to_dict()
        d["dataset"] = args.dataset
        cfg = ExperimentConfig.from_dict(d)
    _, info = train_network(cfg)
    print(json.dumps({k: v for k, v in info.items() if k not in ("train_loss", "val_loss")}, indent=2))
    return 0


def cmd_vision(args) -> int:
    cfg = _load(args, "vision_demo")
    result = vision_demo(cfg, pose_state=args.pose, cloud_path=args.cloud)
    print(json.dumps(result, indent=2))
    return 0


def cmd_plotdata(args) -> int:
    for p in emit_plot_data(args.telemetry, args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="headctl", description="Adaptive head-positioning simulation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sensing=False):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        if sensing:
            p.add_argument("--sensing", choices=("direct", "vision"))

    p = sub.add_parser("run", help="closed-loop tracking experiment")
    common(p, sensing=True)
    p.add_argument("--kind", choices=("track3dof", "roll_only"), help="preset used when no --config is given")
    p.add_argument("--batch", help="comma-separated seeds run in parallel, one subdirectory each")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("capture", help="open-loop excitation dataset")
    common(p)
    p.add_argument("--duration", type=float, help="seconds of excitation")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("train", help="train the approximator")
    common(p)
    p.add_argument("--dataset", help="capture CSV (default: capture on the fly)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("vision", help="run the pose pipeline on one cloud")
    common(p)
    p.add_argument("--pose", type=float, nargs=3, metavar=("Z_MM", "PITCH", "ROLL"), help="render the head here")
    p.add_argument("--cloud", help="read an 'x y z' text cloud instead of rendering")
    p.set_defaults(func=cmd_vision)

    p = sub.add_parser("plotdata", help="split telemetry into per-axis series")
    p.add_argument("telemetry")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HeadctlError, OSError, ValueError) as exc:
        print(f"headctl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

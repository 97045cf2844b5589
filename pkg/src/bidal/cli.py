"""Command-line entry point.

Subcommands: gen, train-disc, sample-source, sample-target, run, bench,
report. Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as frameio
from .core import Domain
from .discriminator import (
    DiscriminatorModel,
    NumericalError,
    TrainConfig,
    train,
)
from .pipeline import run_bidomain, serialize_report
from .scoring import scene_vector
from .simulator import SyntheticConfig, benchmark, generate
from .source_sampler import score_source, select_source
from .target_sampler import sample_round

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bidal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", help="synthetic config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train-disc", help="train the domain discriminator")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--config", help="pipeline config JSON (discriminator section)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model checkpoint path")

    p = sub.add_parser("sample-source", help="domainness-aware source selection")
    p.add_argument("--frames", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", default="threshold:0")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample-target", help="diversity-based target selection")
    p.add_argument("--frames", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="full bi-domain pipeline")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--eval", dest="eval_frames")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="report JSON path")

    p = sub.add_parser("bench", help="strategy benchmark sweep")
    p.add_argument("--config", help="synthetic config JSON")
    p.add_argument("--strategies", default="random,bidomain")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--budgets", default="0.01,0.05")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="summarize a run or benchmark report")
    p.add_argument("--in", dest="path", required=True)
    return parser


def _synthetic_config(args) -> SyntheticConfig:
    if args.config:
        cfg = frameio.load_config(args.config)
        if not isinstance(cfg, SyntheticConfig):
            raise frameio.ConfigError("expected a synthetic config")
    else:
        cfg = SyntheticConfig()
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    return cfg


def _cmd_gen(args) -> int:
    cfg = _synthetic_config(args)
    os.makedirs(args.out, exist_ok=True)
    source, target, eval_frames = generate(cfg)
    frameio.save_frames(source, os.path.join(args.out, "source.ndjson"))
    frameio.save_frames(target, os.path.join(args.out, "target.ndjson"))
    frameio.save_frames(eval_frames, os.path.join(args.out, "eval.ndjson"))
    print("wrote %d source / %d target / %d eval frames to %s"
          % (len(source), len(target), len(eval_frames), args.out))
    return EXIT_OK


def _cmd_train_disc(args) -> int:
    source = frameio.load_frames(args.source)
    target = frameio.load_frames(args.target)
    cfg = TrainConfig()
    if args.config:
        pcfg = frameio.load_config(args.config)
        cfg = pcfg.discriminator
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    src_vecs = [scene_vector(f) for f in source]
    tgt_vecs = [scene_vector(f) for f in target]
    dims = (len(src_vecs[0]), 64, 32, 1)
    model = DiscriminatorModel.initialize(dims, seed=cfg.seed)
    model, history = train(model, src_vecs, tgt_vecs, cfg)
    model.save(args.out)
    print("final loss %.6f after %d epochs -> %s"
          % (history[-1] if history else float("nan"), len(history), args.out))
    return EXIT_OK


def _cmd_sample_source(args) -> int:
    frames = [
        f for f in frameio.load_frames(args.frames) if f.domain == Domain.SOURCE
    ]
    model = DiscriminatorModel.load(args.model)
    mode = frameio.parse_source_mode(args.mode)
    selected = select_source(score_source(frames, model), mode)
    with open(args.out, "w") as fh:
        fh.write("".join(i + "\n" for i in selected))
    print("selected %d of %d source frames" % (len(selected), len(frames)))
    return EXIT_OK


def _cmd_sample_target(args) -> int:
    frames = [
        f for f in frameio.load_frames(args.frames) if f.domain == Domain.TARGET
    ]
    model = DiscriminatorModel.load(args.model)
    frames = sorted(frames, key=lambda f: f.id)
    selected = sample_round(frames, model, args.budget, roi_dim=_roi_dim(frames))
    with open(args.out, "w") as fh:
        fh.write("".join(i + "\n" for i in selected))
    print("selected %d of %d target frames" % (len(selected), len(frames)))
    return EXIT_OK


def _roi_dim(frames) -> int:
    for f in frames:
        rois = np.asarray(f.roi_features)
        if rois.size:
            return rois.shape[1]
    return 1


def _cmd_run(args) -> int:
    cfg = frameio.load_config(args.config)
    from .pipeline import PipelineConfig

    if not isinstance(cfg, PipelineConfig):
        raise frameio.ConfigError("expected a pipeline config")
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    source = frameio.load_frames(args.source)
    target = frameio.load_frames(args.target)
    eval_frames = frameio.load_frames(args.eval_frames) if args.eval_frames else []

    from .simulator import ProxyDetector

    labels = {f.hidden_label for f in source if f.hidden_label is not None}
    n_classes = max(2, len(labels))
    oracle = ProxyDetector(n_classes=n_classes, roi_dim=_roi_dim(source + target))
    manifest = os.path.splitext(args.out)[0] + ".manifest.txt"
    _, _, report = run_bidomain(
        source, target, oracle, cfg, eval_frames, manifest_path=manifest
    )
    with open(args.out, "w") as fh:
        fh.write(serialize_report(report))
    status = report.get("halted", "completed")
    print("%s; report -> %s" % (status, args.out))
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _synthetic_config(args)
    strategies = [s for s in args.strategies.split(",") if s]
    budgets = [float(b) for b in args.budgets.split(",") if b]
    report = benchmark(
        cfg,
        strategies=strategies,
        seeds=tuple(range(args.seeds)),
        budget_fracs=budgets,
    )
    os.makedirs(args.out, exist_ok=True)
    report.write_csv(os.path.join(args.out, "benchmark.csv"))
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        fh.write(report.to_json())
    report.write_plot_data(args.out)
    print(json.dumps(report.summary["mean_accuracy"], indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_report(args) -> int:
    with open(args.path) as fh:
        payload = json.load(fh)
    if "summary" in payload:
        print(json.dumps(payload["summary"], indent=2, sort_keys=True))
    else:
        rounds = payload.get("rounds", [])
        print("stages: %s" % ", ".join(payload.get("stages", [])))
        for r in rounds:
            print(
                "round %d @ epoch %d: %d selected"
                % (r["round"], r["trigger_epoch"], len(r["selected"]))
            )
        if "final_metric" in payload:
            print("final metric: %.4f" % payload["final_metric"])
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "train-disc": _cmd_train_disc,
    "sample-source": _cmd_sample_source,
    "sample-target": _cmd_sample_target,
    "run": _cmd_run,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        sys.stderr.write("numerical failure: %s\n" % exc)
        return EXIT_NUMERIC
    except (frameio.FrameFormatError, frameio.ConfigError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write("data error: %s\n" % exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

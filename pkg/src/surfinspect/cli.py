"""Command-line entry point: ``surfinspect <subcommand> [--config FILE] [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import config as cfg
from .data import (
    CleanseThresholds,
    DatasetManifest,
    Source,
    aggregate,
    assign_split,
    balance,
    cleanse,
    format_rejections,
    merge,
    neu_manifest,
    offline_rotations,
)
from .networks import load_checkpoint, make_spec
from .networks.state import init_state
from .synth import ShapeParams, SynthConfig, generate_dataset, synthetic_topup

log = logging.getLogger("surfinspect")
SUBCOMMANDS = ("datagen", "prep", "train", "eval", "crossval", "bench")


def _synth_config(c: dict) -> SynthConfig:
    shapes = ShapeParams(kinds=c["shape_kinds"], size_range=tuple(c["shape_size"]),
                         count_range=tuple(c["shape_count"]))
    return SynthConfig(size=c["image_size"], materials=c["materials"], styles=c["styles"],
                       shapes=shapes, edge_probability=c["edge_probability"])


def train_config(c: dict):
    from .training import TrainConfig
    return TrainConfig(batch_size=c["batch_size"], base_lr=c["base_lr"], lr_step_epochs=c["lr_step_epochs"],
                       lr_multiplier=c["lr_multiplier"], weight_decay=c["weight_decay"],
                       max_epochs=c["max_epochs"], seed=c["seed"], rmsprop_alpha=c["rmsprop_alpha"],
                       rmsprop_eps=c["rmsprop_eps"], scale_range=tuple(c["scale_range"]) or None,
                       eval_batch_size=c["eval_batch_size"])


def network_spec(c: dict, class_count: int):
    return make_spec(c["network"], c["plan"], c["input_side"], class_count, c["merge_channels"])


def _load_manifest(c: dict) -> DatasetManifest:
    if c["manifest"] is None:
        raise cfg.ConfigError("no manifest given (set 'manifest')")
    return DatasetManifest.load(c["manifest"])


def cmd_datagen(c: dict, out: Path) -> int:
    sc = _synth_config(c)
    train = generate_dataset(c["n_defect"], c["n_nondefect"], c["seed"], out / "train", sc,
                             manifest_name=None)
    manifest = train
    if c["test_defect"] + c["test_nondefect"] > 0:
        # independent stream for the held-out corpus
        test = generate_dataset(c["test_defect"], c["test_nondefect"], c["seed"] + 1_000_003, out / "test",
                                sc, split="test", manifest_name=None)
        manifest = merge(train, test)
    manifest.save(out / "manifest.txt")
    print(f"wrote {len(manifest)} images and {out / 'manifest.txt'}")
    return 0


def _parse_source(text: str) -> Source:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise cfg.ConfigError(f"source {text!r} must be dir:label[:material]")
    return Source(*parts)


def cmd_prep(c: dict, out: Path) -> int:
    if c["sources"]:
        manifest = aggregate([_parse_source(s) for s in c["sources"]], out_dir=out, seed=c["seed"])
    else:
        manifest = _load_manifest(c)
        manifest.validate()
    manifest, rejected = cleanse(manifest, CleanseThresholds(c["min_mean"], c["max_mean"], c["min_std"]))
    (out / "rejections.txt").write_text(format_rejections(rejected))
    shortfalls = {}
    if c["quota"] is not None:
        manifest, shortfalls = balance(manifest, c["quota"], c["seed"])
    (out / "shortfalls.txt").write_text("".join(f"{l}\t{m}\t{n}\n" for (l, m), n in sorted(shortfalls.items())))
    if c["test_fraction"] > 0:
        manifest = assign_split(manifest, c["test_fraction"], c["seed"])
    if c["rotations"]:
        manifest = offline_rotations(manifest, c["rotations"], out / "rotated", "train",
                                     c["rotate_labels"] or None)
    if c["synth_topup"]:
        if c["quota"] is None:
            raise cfg.ConfigError("synth_topup needs a quota to fill")
        manifest, added = synthetic_topup(manifest, c["quota"], c["seed"], out / "synthetic",
                                          _synth_config(c))
        for material, n in sorted(added.items()):
            print(f"synthetic top-up: {n} defect images for {material}")
    manifest.save(out / "manifest.txt")
    print(f"kept {len(manifest)} records, rejected {len(rejected)}; manifest {out / 'manifest.txt'}")
    return 0


def cmd_train(c: dict, out: Path) -> int:
    from .training import fit
    manifest = _load_manifest(c)
    manifest.validate()
    spec = network_spec(c, len(manifest.classes))
    state = init_state(spec, np.random.default_rng(c["seed"]))
    _, logs = fit(spec, state, manifest, train_config(c), out_dir=out,
                  progress=lambda e: print(e.csv_row(), flush=True))
    last = logs[-1]
    print(f"final epoch {last.epoch}: train_acc {last.train_acc:.4f} test_acc {last.test_acc}")
    return 0


def cmd_eval(c: dict, out: Path) -> int:
    from .evaluation import evaluate
    manifest = _load_manifest(c)
    if c["checkpoint"] is None:
        raise cfg.ConfigError("no checkpoint given (set 'checkpoint')")
    spec = network_spec(c, len(manifest.classes))
    state = load_checkpoint(c["checkpoint"], spec)
    cm, report = evaluate(spec, state, manifest, c["split"], c["eval_batch_size"])
    (out / "confusion.txt").write_text(cm.to_text())
    (out / "metrics.txt").write_text(report.to_text())
    print(report.to_text(), end="")
    return 0


def cmd_crossval(c: dict, out: Path) -> int:
    from .evaluation import crossvalidate
    manifest = neu_manifest(c["neu_dir"], c["seed"]) if c["neu_dir"] else _load_manifest(c)
    k = len(manifest.classes)

    def builder(seed):
        spec = network_spec(c, k)
        return spec, init_state(spec, np.random.default_rng(seed))

    result = crossvalidate(builder, manifest, train_config(c), c["folds"], c["seed"], out_dir=str(out))
    (out / "crossval.txt").write_text(result.to_text())
    print(result.to_text(), end="")
    return 0


def cmd_bench(c: dict, out: Path) -> int:
    from .evaluation import benchmark_inference
    lines = []
    for name in c["networks"]:
        spec = make_spec(name, c["plan"] if name == c["network"] else None, c["input_side"], 2,
                         c["merge_channels"] if name == "multivis" else None)
        state = init_state(spec, np.random.default_rng(c["seed"])).eval()
        report = benchmark_inference(spec, state, c["input_side"])
        lines.append(report.to_text())
        print(report.to_text(), end="")
    (out / "latency.txt").write_text("".join(lines))
    return 0


COMMANDS = {"datagen": cmd_datagen, "prep": cmd_prep, "train": cmd_train, "eval": cmd_eval,
            "crossval": cmd_crossval, "bench": cmd_bench}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="override 'seed'")
    common.add_argument("--out", help="override 'out' (output directory)")
    common.add_argument("--threads", type=int, help="BLAS threads; 0 = deterministic single thread")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    parser = argparse.ArgumentParser(prog="surfinspect", description="Surface-defect CNN toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"datagen": "generate a synthetic defect corpus", "prep": "aggregate, cleanse, balance, augment",
             "train": "train a network", "eval": "evaluate a checkpoint",
             "crossval": "stratified k-fold cross-validation", "bench": "single-image latency benchmark"}
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_args(args) -> dict:
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise cfg.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    for key in ("seed", "out", "threads"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return cfg.resolve(args.config, overrides)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        c = resolve_args(args)
        out = Path(c["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(f"# surfinspect {args.command}\n" + cfg.to_text(c))
        threads = 1 if c["threads"] == 0 else c["threads"]
        with threadpool_limits(limits=threads):
            return COMMANDS[args.command](c, out)
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # one machine-parsable line for any failure
        message = " ".join(str(exc).split())
        print(f"error: {args.command}: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

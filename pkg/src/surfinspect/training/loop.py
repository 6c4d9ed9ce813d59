"""Epoch loop with per-epoch evaluation, checkpoints and a CSV learning curve."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..data.loader import ImageStore, batch_iterator
from ..data.manifest import DatasetManifest
from ..engine import logsoftmax_nll
from ..evaluation.evaluate import predict_split
from ..networks import backward, forward, save_checkpoint
from ..networks.spec import NetworkSpec
from ..networks.state import NetworkState
from .optim import NonFiniteGradient, RMSProp, TrainConfig, lr_at

log = logging.getLogger(__name__)
CURVE_HEADER = "epoch,lr,train_loss,train_acc,test_acc,seconds"


@dataclass
class EpochLog:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    test_acc: Optional[float]
    seconds: float

    def csv_row(self) -> str:
        test = "" if self.test_acc is None else repr(self.test_acc)
        return f"{self.epoch},{self.lr!r},{self.train_loss!r},{self.train_acc!r},{test},{self.seconds:.3f}"


class DivergenceError(FloatingPointError):
    """Training produced a non-finite loss or gradient; ``state`` is the last good one."""

    def __init__(self, message: str, state: NetworkState, logs: list):
        super().__init__(message)
        self.state = state
        self.logs = logs


def read_curve(path) -> list[EpochLog]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line == CURVE_HEADER:
            continue
        e, lr, loss, acc, test, sec = line.split(",")
        rows.append(EpochLog(int(e), float(lr), float(loss), float(acc),
                             float(test) if test else None, float(sec)))
    return rows


def _write_metadata(path: Path, spec: NetworkSpec, config: TrainConfig, manifest: DatasetManifest):
    lines = [f"network = {spec.name}", f"fingerprint = {spec.fingerprint()}",
             f"input_side = {spec.input_side}", f"class_count = {spec.class_count}",
             f"manifest_records = {len(manifest)}", f"manifest_seed = {manifest.seed}"]
    lines += [f"{k} = {v}" for k, v in config.as_dict().items()]
    path.write_text("\n".join(lines) + "\n")


def fit(spec: NetworkSpec, state: NetworkState, manifest: DatasetManifest, config: TrainConfig,
        out_dir=None, store: Optional[ImageStore] = None, progress=None
        ) -> tuple[NetworkState, list[EpochLog]]:
    """Train ``state`` in place on the manifest's train split.

    After every epoch the test split (if any) is scored in eval mode. With
    ``out_dir`` set, ``curve.csv``, ``run.txt``, ``best.ckpt`` (best test
    accuracy) and ``final.ckpt`` are written there. The returned state is in
    eval mode.
    """
    train_records = manifest.split("train")
    if not train_records:
        raise ValueError("manifest has an empty train split")
    if spec.class_count != len(manifest.classes):
        raise ValueError(f"network has {spec.class_count} outputs but manifest has "
                         f"{len(manifest.classes)} classes")
    has_test = bool(manifest.split("test"))
    store = store if store is not None else ImageStore()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_metadata(out / "run.txt", spec, config, manifest)
        curve = open(out / "curve.csv", "w")
        curve.write(f"# rmsprop_alpha={config.rmsprop_alpha} rmsprop_eps={config.rmsprop_eps} "
                    f"weight_decay={config.weight_decay} batch_size={config.batch_size}\n")
        curve.write(CURVE_HEADER + "\n")
    opt = RMSProp(state.params, config.rmsprop_alpha, config.rmsprop_eps)
    logs: list[EpochLog] = []
    best = -1.0
    last_good = state.copy()
    try:
        for epoch in range(config.max_epochs):
            t0 = time.perf_counter()
            lr = lr_at(config, epoch)
            rng = np.random.default_rng([config.seed, epoch])
            state.train()
            loss_sum, correct, seen = 0.0, 0, 0
            for x, y in batch_iterator(manifest, "train", config.batch_size, rng, side=spec.input_side,
                                       train=True, scale_range=config.scale_range, store=store):
                logits = forward(spec, state, x, mode="train")
                loss, g = logsoftmax_nll(logits, y)
                if not math.isfinite(loss):
                    raise DivergenceError(f"non-finite loss at epoch {epoch}", last_good, logs)
                try:
                    opt.step(state.params, backward(spec, state, g), lr, config.weight_decay)
                except NonFiniteGradient as exc:
                    raise DivergenceError(f"{exc} at epoch {epoch}", last_good, logs) from exc
                loss_sum += float(loss) * len(y)
                correct += int((np.argmax(logits, axis=1) == y).sum())
                seen += len(y)
            state.eval()
            test_acc = None
            if has_test:
                yt, yp = predict_split(spec, state, manifest, "test", config.eval_batch_size, store)
                test_acc = float((yt == yp).mean())
            entry = EpochLog(epoch, lr, loss_sum / seen, correct / seen, test_acc,
                             time.perf_counter() - t0)
            logs.append(entry)
            last_good = state.copy()
            if out is not None:
                curve.write(entry.csv_row() + "\n")
                curve.flush()
                score = test_acc if test_acc is not None else entry.train_acc
                if score > best:
                    best = score
                    save_checkpoint(state, out / "best.ckpt")
            if progress is not None:
                progress(entry)
            log.info("epoch %d lr %.3g loss %.4f train %.4f test %s", epoch, lr, entry.train_loss,
                     entry.train_acc, test_acc)
    except DivergenceError:
        log.error("training diverged; keeping the last good state")
        state.params, state.buffers = last_good.params, last_good.buffers
        state.eval()
        if out is not None and logs:
            save_checkpoint(last_good, out / "final.ckpt")
        raise
    finally:
        if out is not None:
            curve.close()
    if out is not None:
        save_checkpoint(state, out / "final.ckpt")
    return state, logs

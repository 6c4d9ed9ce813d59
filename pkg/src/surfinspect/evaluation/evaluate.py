"""Evaluation over manifest splits and stratified k-fold cross-validation."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..data.loader import ImageStore, batch_iterator
from ..data.manifest import DatasetManifest
from ..networks import forward
from ..networks.spec import NetworkSpec
from ..networks.state import NetworkState
from .metrics import ConfusionMatrix, MetricsReport, compute_metrics, mean_report


def predict_split(spec: NetworkSpec, state: NetworkState, manifest: DatasetManifest,
                  split: Optional[str] = "test", batch_size: int = 50,
                  store: Optional[ImageStore] = None, records=None) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode predictions in manifest order. Returns ``(y_true, y_pred)``."""
    ys, ps = [], []
    it = batch_iterator(manifest, split, batch_size, np.random.default_rng(0), side=spec.input_side,
                        train=False, shuffle=False, store=store, records=records)
    for x, y in it:
        logits = forward(spec, state, x, mode="eval")
        ys.append(y)
        ps.append(np.argmax(logits, axis=1))
    if not ys:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(ys), np.concatenate(ps)


def evaluate(spec: NetworkSpec, state: NetworkState, manifest: DatasetManifest,
             split: Optional[str] = "test", batch_size: int = 50,
             store: Optional[ImageStore] = None) -> tuple[ConfusionMatrix, MetricsReport]:
    if spec.class_count != len(manifest.classes):
        raise ValueError(f"network has {spec.class_count} outputs but manifest has "
                         f"{len(manifest.classes)} classes")
    y, p = predict_split(spec, state, manifest, split, batch_size, store)
    if len(y) == 0:
        raise ValueError(f"split {split!r} is empty")
    cm = ConfusionMatrix.from_predictions(y, p, spec.class_count, manifest.classes)
    return cm, compute_metrics(cm)


def kfold_split(manifest: DatasetManifest, k: int = 10, seed: int = 0
                ) -> list[tuple[DatasetManifest, DatasetManifest]]:
    """Stratified folds: each class is shuffled and dealt round-robin over the folds.

    Returned manifests carry ``split`` = train/test accordingly.
    """
    if k < 2:
        raise ValueError("k-fold cross-validation needs k >= 2")
    if len(manifest) < k:
        raise ValueError(f"cannot split {len(manifest)} records into {k} folds")
    rng = np.random.default_rng(seed)
    by_label = defaultdict(list)
    for i, r in enumerate(manifest.records):
        by_label[r.label].append(i)
    fold_of = np.empty(len(manifest), dtype=np.int64)
    offset = 0
    for label in manifest.classes:
        idx = np.array(by_label.get(label, []), dtype=np.int64)
        perm = idx[rng.permutation(len(idx))]
        # rotate the dealing start so remainders spread across folds
        fold_of[perm] = (np.arange(len(perm)) + offset) % k
        offset = (offset + len(perm)) % k
    folds = []
    for f in range(k):
        train = [r.with_split("train") for i, r in enumerate(manifest.records) if fold_of[i] != f]
        test = [r.with_split("test") for i, r in enumerate(manifest.records) if fold_of[i] == f]
        folds.append((manifest.derive(train, seed=seed), manifest.derive(test, seed=seed)))
    return folds


@dataclass
class CrossValReport:
    mean: MetricsReport
    folds: list

    def to_text(self) -> str:
        lines = ["fold\ttop1\tsamples"]
        for i, r in enumerate(self.folds):
            lines.append(f"{i}\t{r.top1:.6f}\t{r.count}")
        lines.append(f"mean\t{self.mean.top1:.6f}\t{self.mean.count}")
        return "\n".join(lines) + "\n"


def crossvalidate(builder: Callable[[int], tuple], manifest: DatasetManifest, config, k: int = 10,
                  seed: Optional[int] = None, train_fn=None, out_dir=None) -> CrossValReport:
    """Train a freshly initialized network per fold and evaluate it on the held-out fold.

    ``builder(seed)`` returns ``(spec, state)``. ``train_fn`` defaults to the
    standard training loop.
    """
    if train_fn is None:
        from ..training import fit
        train_fn = fit
    seed = config.seed if seed is None else seed
    store = ImageStore()
    reports = []
    for f, (train, test) in enumerate(kfold_split(manifest, k, seed)):
        spec, state = builder(seed + f)
        fold_manifest = train.derive(train.records + test.records)
        fold_dir = None if out_dir is None else f"{out_dir}/fold{f:02d}"
        state, _ = train_fn(spec, state, fold_manifest, config, out_dir=fold_dir, store=store)
        _, report = evaluate(spec, state, fold_manifest, "test", store=store)
        reports.append(report)
    return CrossValReport(mean_report(reports), reports)

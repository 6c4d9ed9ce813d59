"""Confusion matrices and the metrics derived from them."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np


def ratio(num: float, den: float) -> Optional[float]:
    """``num / den``, or None when the denominator is zero."""
    return None if den == 0 else num / den


@dataclass
class ConfusionMatrix:
    """``matrix[true, predicted]`` counts; class index 1 is the positive class when binary."""
    matrix: np.ndarray
    classes: tuple = ()
    positive: int = 1

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.int64)
        k = self.matrix.shape[0]
        if self.matrix.shape != (k, k) or k < 2:
            raise ValueError(f"confusion matrix must be K x K with K >= 2, got {self.matrix.shape}")
        if (self.matrix < 0).any():
            raise ValueError("confusion counts must be non-negative")
        if not self.classes:
            self.classes = tuple(str(i) for i in range(k))

    @classmethod
    def from_predictions(cls, y_true, y_pred, k: int, classes: Sequence[str] = ()) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise ValueError("label and prediction vectors differ in length")
        m = np.zeros((k, k), dtype=np.int64)
        np.add.at(m, (y_true, y_pred), 1)
        return cls(m, tuple(classes))

    @classmethod
    def binary(cls, tp: int, fp: int, tn: int, fn: int, classes=("non-defect", "defect")) -> "ConfusionMatrix":
        return cls(np.array([[tn, fp], [fn, tp]]), tuple(classes))

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def _binary_only(self):
        if self.k != 2:
            raise ValueError("TP/FP/TN/FN are defined for binary matrices only")

    @property
    def tp(self) -> int:
        self._binary_only()
        return int(self.matrix[self.positive, self.positive])

    @property
    def fn(self) -> int:
        self._binary_only()
        return int(self.matrix[self.positive, 1 - self.positive])

    @property
    def fp(self) -> int:
        self._binary_only()
        return int(self.matrix[1 - self.positive, self.positive])

    @property
    def tn(self) -> int:
        self._binary_only()
        return int(self.matrix[1 - self.positive, 1 - self.positive])

    def class_recall(self, i: int) -> Optional[float]:
        return ratio(int(self.matrix[i, i]), int(self.matrix[i].sum()))

    def to_text(self) -> str:
        """Integer grid: rows are true classes, columns predicted classes."""
        head = "true\\pred\t" + "\t".join(self.classes)
        rows = [f"{c}\t" + "\t".join(str(int(v)) for v in row) for c, row in zip(self.classes, self.matrix)]
        return "\n".join([head] + rows) + "\n"


@dataclass
class MetricsReport:
    """Metrics from one confusion matrix; undefined ratios are None.

    ``per_class_accuracy`` is each class's recall, so for binary problems the
    defect entry equals ``recall`` and the non-defect entry equals ``specificity``.
    """
    accuracy: Optional[float]
    per_class_accuracy: dict
    precision: Optional[float] = None
    recall: Optional[float] = None
    specificity: Optional[float] = None
    top1: Optional[float] = None
    count: int = 0

    def to_text(self) -> str:
        def fmt(v):
            return "absent" if v is None else repr(float(v))
        lines = [f"samples\t{self.count}", f"accuracy\t{fmt(self.accuracy)}"]
        for name in ("precision", "recall", "specificity", "top1"):
            lines.append(f"{name}\t{fmt(getattr(self, name))}")
        for c, v in self.per_class_accuracy.items():
            lines.append(f"class_accuracy[{c}]\t{fmt(v)}")
        return "\n".join(lines) + "\n"


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    total = cm.total
    correct = int(np.trace(cm.matrix))
    accuracy = ratio(correct, total)
    per_class = {c: cm.class_recall(i) for i, c in enumerate(cm.classes)}
    if cm.k == 2:
        tp, fp, tn, fn = cm.tp, cm.fp, cm.tn, cm.fn
        return MetricsReport(accuracy, per_class, ratio(tp, tp + fp), ratio(tp, tp + fn),
                             ratio(tn, tn + fp), accuracy, total)
    return MetricsReport(accuracy, per_class, top1=accuracy, count=total)


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Field-wise mean over reports, skipping absent values (absent if none defined)."""
    def avg(values):
        vals = [v for v in values if v is not None]
        if not vals:
            return None
        # identical folds average to exactly that value
        return float(vals[0]) if all(v == vals[0] for v in vals) else float(np.mean(vals))
    out = {}
    for f in fields(MetricsReport):
        if f.name == "per_class_accuracy":
            keys = list(reports[0].per_class_accuracy)
            out[f.name] = {k: avg(r.per_class_accuracy.get(k) for r in reports) for k in keys}
        elif f.name == "count":
            out[f.name] = int(sum(r.count for r in reports))
        else:
            out[f.name] = avg(getattr(r, f.name) for r in reports)
    return MetricsReport(**out)

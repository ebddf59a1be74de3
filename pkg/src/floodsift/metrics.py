"""Confusion-matrix evaluation: per-class precision/recall/F1 and a
fixed-width text report."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np


@dataclass(eq=False)
class ConfusionMatrix:
    """Square count table; rows are actual classes, columns predicted."""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: tuple[ClassMetrics, ...]
    accuracy: float
    total_support: int


def confusion_matrix(actual, predicted, n_classes: int) -> ConfusionMatrix:
    """Count (actual, predicted) pairs into an n_classes x n_classes table.

    Args:
        actual: true class codes.
        predicted: predicted class codes, same length.
        n_classes: table size; every code must lie in [0, n_classes).

    Returns:
        ConfusionMatrix; entry (i, j) counts rows of class i predicted as j.
    """
    actual = np.asarray(actual, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if actual.shape != predicted.shape or actual.ndim != 1:
        raise ValueError("actual and predicted must be vectors of equal length")
    if n_classes < 1:
        raise ValueError("n_classes must be at least 1")
    for name, codes in (("actual", actual), ("predicted", predicted)):
        if codes.size and (codes.min() < 0 or codes.max() >= n_classes):
            raise ValueError(f"{name} codes must lie in [0, {n_classes})")
    counts = np.bincount(actual * n_classes + predicted,
                         minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes))


def accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total; undefined (raises) for an empty matrix."""
    if cm.total == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def per_class_metrics(cm: ConfusionMatrix) -> tuple[ClassMetrics, ...]:
    """Precision, recall, F1, and support for each class.

    A class never predicted has precision 0; a class with no actual rows has
    recall 0; F1 is 0 whenever precision + recall is 0.
    """
    counts = cm.counts
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    out = []
    for c in range(cm.n_classes):
        tp = float(counts[c, c])
        precision = tp / col_sums[c] if col_sums[c] > 0 else 0.0
        recall = tp / row_sums[c] if row_sums[c] > 0 else 0.0
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        out.append(ClassMetrics(precision=float(precision), recall=float(recall),
                                f1=float(f1), support=int(row_sums[c])))
    return tuple(out)


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """Bundle per-class metrics with overall accuracy and total support."""
    return ClassificationReport(
        per_class=per_class_metrics(cm),
        accuracy=accuracy(cm),
        total_support=cm.total,
    )


def _round_text(value: float, places: str) -> str:
    # Decimal on repr() rounds the printed value half-up, matching how the
    # numbers read rather than their binary representation.
    return str(Decimal(repr(value)).quantize(Decimal(places), rounding=ROUND_HALF_UP))


def format_report(report: ClassificationReport,
                  class_names: Sequence[str] | None = None) -> str:
    """Render the fixed-width text table.

    One row per class in code order with precision, recall, and F1 rounded
    half-up to 2 decimals, then an accuracy line at 4 decimals. The layout
    is stable and safe to diff byte-for-byte.
    """
    k = len(report.per_class)
    names = list(class_names) if class_names is not None else [str(c) for c in range(k)]
    if len(names) != k:
        raise ValueError(f"expected {k} class names, got {len(names)}")
    name_width = max(len("accuracy"), max(len(n) for n in names))
    lines = [
        f"{'':<{name_width}}  {'precision':>9}  {'recall':>9}  {'f1-score':>9}  {'support':>9}",
        "",
    ]
    for name, m in zip(names, report.per_class):
        lines.append(
            f"{name:<{name_width}}  {_round_text(m.precision, '0.01'):>9}  "
            f"{_round_text(m.recall, '0.01'):>9}  {_round_text(m.f1, '0.01'):>9}  "
            f"{m.support:>9d}"
        )
    lines.append("")
    lines.append(
        f"{'accuracy':<{name_width}}  {'':>9}  {'':>9}  "
        f"{_round_text(report.accuracy, '0.0001'):>9}  {report.total_support:>9d}"
    )
    return "\n".join(lines) + "\n"

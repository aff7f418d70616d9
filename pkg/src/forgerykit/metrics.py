"""Confusion matrices, balanced classification metrics, ROC curves, and AUC.

Tampered is the positive class throughout; a sample is predicted positive
when its score is greater than or equal to the threshold, so ties resolve
toward detection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import EmptyInputError, SingleClassInputError
from .scores import ScoredSample
from .utils import format_real


class Averaging(enum.Enum):
    BINARY = "binary"
    MACRO = "macro"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts of a binary decision against truth (positive class = tampered)."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


@dataclass(frozen=True)
class RocCurve:
    """Operating points (threshold, fpr, tpr) swept from strictest to loosest.

    The first point is the (+inf, 0, 0) sentinel; thresholds strictly decrease
    afterwards and both rates are non-decreasing, ending at (min score, 1, 1).
    """

    points: tuple[tuple[float, float, float], ...]
    positives: int
    negatives: int


class BasicMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsRow:
    """One evaluation row: the standard six metrics plus the operating threshold."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    mcc: float
    auc: float
    threshold: float
    averaging: Averaging

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall", "f1", "auc", "threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not -1.0 <= self.mcc <= 1.0:
            raise ValueError(f"mcc must lie in [-1, 1], got {self.mcc}")


def confusion_matrix(scores: Sequence[ScoredSample], threshold: float) -> ConfusionMatrix:
    """Tally predictions (score >= threshold means tampered) against true labels."""
    if not scores:
        raise EmptyInputError("cannot build a confusion matrix from no scores")
    tp = fp = tn = fn = 0
    for s in scores:
        predicted = s.score >= threshold
        if s.label == 1:
            tp += predicted
            fn += not predicted
        else:
            fp += predicted
            tn += not predicted
    return ConfusionMatrix(tp, fp, tn, fn)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    # Zero-denominator values are defined as 0 so degenerate classifiers still report.
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def basic_metrics(cm: ConfusionMatrix, averaging: Averaging = Averaging.BINARY) -> BasicMetrics:
    """Accuracy plus precision/recall/F1 under the chosen averaging mode.

    Binary reports the positive class. Macro averages the two per-class values
    unweighted; Weighted averages them by class support. For binary problems
    weighted recall telescopes to (tp + tn) / total, i.e. it always equals
    accuracy, so it is computed in that exact form.
    """
    if cm.total == 0:
        raise EmptyInputError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    p_pos, r_pos, f_pos = _prf(cm.tp, cm.fp, cm.fn)
    if averaging is Averaging.BINARY:
        return BasicMetrics(accuracy, p_pos, r_pos, f_pos)
    # For the authentic class, predicted-negative errors swap roles: fn are
    # its false positives and fp its false negatives.
    p_neg, r_neg, f_neg = _prf(cm.tn, cm.fn, cm.fp)
    if averaging is Averaging.MACRO:
        return BasicMetrics(
            accuracy,
            (p_pos + p_neg) / 2.0,
            (r_pos + r_neg) / 2.0,
            (f_pos + f_neg) / 2.0,
        )
    support_pos = cm.positives
    support_neg = cm.negatives
    precision = (p_pos * support_pos + p_neg * support_neg) / cm.total
    recall = accuracy
    f1 = (f_pos * support_pos + f_neg * support_neg) / cm.total
    return BasicMetrics(accuracy, precision, recall, f1)


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any marginal count is zero."""
    if cm.total == 0:
        raise EmptyInputError("confusion matrix is empty")
    factors = (
        (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    )
    if factors == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(factors)


def roc_curve(scores: Sequence[ScoredSample]) -> RocCurve:
    """Sweep the realized score values as thresholds, strictest first.

    Tied scores collapse into a single point, which the trapezoidal AUC
    credits as a diagonal segment (half credit per tie).
    """
    positives = sum(s.label for s in scores)
    negatives = len(scores) - positives
    if positives == 0 or negatives == 0:
        raise SingleClassInputError(
            f"ROC needs both classes; got {positives} positive, {negatives} negative"
        )
    ordered = sorted(scores, key=lambda s: s.score, reverse=True)
    points = [(math.inf, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(ordered):
        value = ordered[i].score
        while i < len(ordered) and ordered[i].score == value:
            if ordered[i].label == 1:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((value, fp / negatives, tp / positives))
    return RocCurve(tuple(points), positives, negatives)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC curve."""
    area = 0.0
    for (_, fpr0, tpr0), (_, fpr1, tpr1) in zip(curve.points, curve.points[1:]):
        area += (fpr1 - fpr0) * (tpr1 + tpr0) / 2.0
    return area


def roc_to_csv(curve: RocCurve) -> str:
    """Render the curve as `threshold,fpr,tpr` CSV; the sentinel is written as inf."""
    lines = ["threshold,fpr,tpr"]
    lines.extend(
        f"{format_real(t)},{format_real(fpr)},{format_real(tpr)}"
        for t, fpr, tpr in curve.points
    )
    return "\n".join(lines) + "\n"


def metrics_row(
    scores: Sequence[ScoredSample], threshold: float, averaging: Averaging
) -> tuple[MetricsRow, ConfusionMatrix]:
    """Evaluate all metrics of one score set at one threshold."""
    cm = confusion_matrix(scores, threshold)
    basics = basic_metrics(cm, averaging)
    area = auc(roc_curve(scores))
    row = MetricsRow(
        accuracy=basics.accuracy,
        precision=basics.precision,
        recall=basics.recall,
        f1=basics.f1,
        mcc=mcc(cm),
        auc=area,
        threshold=threshold,
        averaging=averaging,
    )
    return row, cm

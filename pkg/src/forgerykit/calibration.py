"""Model-specific threshold selection via the Youden Index, plus score-file IO.

Each classifier produces its own probability distribution, so a single fixed
cutoff is rarely optimal. The calibrator sweeps every realized score value on
the ROC curve, picks the threshold maximizing J = TPR - FPR, and persists the
operating point so evaluation can be reproduced bit for bit. Score CSV
import/export decouples evaluation from any particular model: externally
produced scores plug into the same pipeline.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DuplicateIdError, ParseError, RangeError, SingleClassInputError
from .metrics import confusion_matrix, roc_curve
from .scores import ScoredSample
from .utils import atomic_write_text, dump_json, format_real, read_text

SCORE_CSV_HEADER = "id,label,score"


@dataclass(frozen=True)
class ThresholdCalibration:
    """A chosen operating point: threshold, its TPR/FPR, and its Youden J."""

    model_id: str
    threshold: float
    youden_j: float
    tpr_at_opt: float
    fpr_at_opt: float
    calibrated_on: int

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        for name in ("tpr_at_opt", "fpr_at_opt"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        # Sweep-calibrated points always have J >= 0; fixed-threshold baseline
        # records may be negative, so only the exact identity is enforced here.
        if self.youden_j != self.tpr_at_opt - self.fpr_at_opt:
            raise ValueError("youden_j must equal tpr_at_opt - fpr_at_opt exactly")
        if self.calibrated_on < 0:
            raise ValueError("calibrated_on must be non-negative")


def youden_optimal_threshold(
    scores: Sequence[ScoredSample], model_id: str
) -> ThresholdCalibration:
    """Pick the realized score value maximizing J = TPR - FPR.

    Every threshold between two consecutive scores yields the same confusion
    matrix, so sweeping the ROC vertices is exhaustive. Ties on J are broken
    toward higher TPR (fewer missed forgeries), then toward the lower
    threshold.
    """
    curve = roc_curve(scores)
    best = None
    best_key = None
    for threshold, fpr, tpr in curve.points[1:]:
        key = (tpr - fpr, tpr, -threshold)
        if best_key is None or key > best_key:
            best_key = key
            best = (threshold, fpr, tpr)
    threshold, fpr, tpr = best
    return ThresholdCalibration(
        model_id=model_id,
        threshold=threshold,
        youden_j=tpr - fpr,
        tpr_at_opt=tpr,
        fpr_at_opt=fpr,
        calibrated_on=len(scores),
    )


def fixed_threshold_calibration(
    scores: Sequence[ScoredSample], threshold: float, model_id: str
) -> ThresholdCalibration:
    """Measure the operating point of a fixed cutoff (baseline comparisons)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    cm = confusion_matrix(scores, threshold)
    if cm.positives == 0 or cm.negatives == 0:
        raise SingleClassInputError("fixed-threshold calibration needs both classes")
    tpr = cm.tp / cm.positives
    fpr = cm.fp / cm.negatives
    return ThresholdCalibration(
        model_id=model_id,
        threshold=threshold,
        youden_j=tpr - fpr,
        tpr_at_opt=tpr,
        fpr_at_opt=fpr,
        calibrated_on=len(scores),
    )


def apply_threshold(
    scores: Sequence[ScoredSample], cal: ThresholdCalibration
) -> list[int]:
    """Convert probabilities to binary labels: 1 iff score >= threshold."""
    return [1 if s.score >= cal.threshold else 0 for s in scores]


def export_scores(scores: Sequence[ScoredSample]) -> str:
    """Render scores as CSV in canonical id order (round-trips via import_scores)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label", "score"])
    for s in sorted(scores, key=lambda s: s.id):
        writer.writerow([s.id, str(s.label), format_real(s.score)])
    return buf.getvalue()


def parse_scores(text: str) -> list[ScoredSample]:
    """Parse and validate score CSV text; result is in canonical id order."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or ",".join(rows[0]) != SCORE_CSV_HEADER:
        raise ParseError(f"line 1: expected header '{SCORE_CSV_HEADER}'")
    samples = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
        sample_id, label_text, score_text = row
        try:
            label = int(label_text)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: label {label_text!r} is not an integer") from exc
        if label not in (0, 1):
            raise RangeError(f"line {lineno}: label {label} is not 0 or 1")
        try:
            score = float(score_text)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: score {score_text!r} is not a real") from exc
        if not 0.0 <= score <= 1.0:
            raise RangeError(f"line {lineno}: score {score} lies outside [0, 1]")
        if sample_id in seen:
            raise DuplicateIdError(f"line {lineno}: duplicate id {sample_id!r}")
        seen.add(sample_id)
        samples.append(ScoredSample(sample_id, label, score))
    samples.sort(key=lambda s: s.id)
    return samples


def import_scores(path: Path | str) -> list[ScoredSample]:
    """Read and validate a score CSV file."""
    return parse_scores(read_text(path))


def save_scores(scores: Sequence[ScoredSample], path: Path | str) -> None:
    atomic_write_text(path, export_scores(scores))


def calibration_to_json(cal: ThresholdCalibration) -> str:
    return dump_json(
        {
            "model_id": cal.model_id,
            "threshold": cal.threshold,
            "youden_j": cal.youden_j,
            "tpr_at_opt": cal.tpr_at_opt,
            "fpr_at_opt": cal.fpr_at_opt,
            "calibrated_on": cal.calibrated_on,
        }
    )


def calibration_from_json(text: str) -> ThresholdCalibration:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid calibration JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("calibration document must be a JSON object")
    try:
        cal = ThresholdCalibration(
            model_id=str(obj["model_id"]),
            threshold=float(obj["threshold"]),
            youden_j=float(obj["youden_j"]),
            tpr_at_opt=float(obj["tpr_at_opt"]),
            fpr_at_opt=float(obj["fpr_at_opt"]),
            calibrated_on=int(obj["calibrated_on"]),
        )
    except KeyError as exc:
        raise ParseError(f"calibration document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid calibration document: {exc}") from exc
    return cal


def save_calibration(cal: ThresholdCalibration, path: Path | str) -> None:
    atomic_write_text(path, calibration_to_json(cal))


def load_calibration(path: Path | str) -> ThresholdCalibration:
    return calibration_from_json(read_text(path))

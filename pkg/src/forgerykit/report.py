"""Per-model evaluation reports and multi-model comparison tables.

Reports carry the full metric row at the calibrated threshold, the confusion
matrix, the calibration itself, and a digest of the evaluated scores so a
report can be traced back to the exact score set it summarizes. All machine
outputs are byte-deterministic; the human-readable table rounds to three
decimals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .calibration import ThresholdCalibration, export_scores
from .errors import ParseError
from .metrics import Averaging, ConfusionMatrix, MetricsRow, metrics_row
from .scores import ScoredSample
from .utils import atomic_write_text, dump_json, format_real, read_text, sha256_hex

REPORT_SCHEMA_VERSION = 1

_COMPARE_COLUMNS = ("accuracy", "precision", "recall", "f1", "mcc", "auc", "threshold")


@dataclass(frozen=True)
class EvaluationReport:
    model_id: str
    metrics: MetricsRow
    confusion: ConfusionMatrix
    calibration: ThresholdCalibration
    dataset_digest: str
    config_echo: dict

    def __post_init__(self):
        if self.metrics.threshold != self.calibration.threshold:
            raise ValueError(
                "report metrics and calibration disagree on the threshold: "
                f"{self.metrics.threshold} vs {self.calibration.threshold}"
            )


def scores_digest(scores: Sequence[ScoredSample]) -> str:
    """Content hash of the canonical CSV form of a score set."""
    return "sha256:" + sha256_hex(export_scores(scores).encode("utf-8"))


def evaluate(
    scores: Sequence[ScoredSample],
    cal: ThresholdCalibration,
    averaging: Averaging = Averaging.WEIGHTED,
    config_echo: dict | None = None,
) -> EvaluationReport:
    """Assemble the full report for one score set at one calibrated threshold."""
    row, cm = metrics_row(scores, cal.threshold, averaging)
    return EvaluationReport(
        model_id=cal.model_id,
        metrics=row,
        confusion=cm,
        calibration=cal,
        dataset_digest=scores_digest(scores),
        config_echo=dict(config_echo or {}),
    )


def report_to_json(report: EvaluationReport) -> str:
    m = report.metrics
    c = report.calibration
    return dump_json(
        {
            "schema_version": REPORT_SCHEMA_VERSION,
            "model_id": report.model_id,
            "metrics": {
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "mcc": m.mcc,
                "auc": m.auc,
                "threshold": m.threshold,
                "averaging": m.averaging.value,
            },
            "confusion": {
                "tp": report.confusion.tp,
                "fp": report.confusion.fp,
                "tn": report.confusion.tn,
                "fn": report.confusion.fn,
            },
            "calibration": {
                "model_id": c.model_id,
                "threshold": c.threshold,
                "youden_j": c.youden_j,
                "tpr_at_opt": c.tpr_at_opt,
                "fpr_at_opt": c.fpr_at_opt,
                "calibrated_on": c.calibrated_on,
            },
            "dataset_digest": report.dataset_digest,
            "config_echo": report.config_echo,
        }
    )


def report_from_json(text: str) -> EvaluationReport:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid report JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("report document must be a JSON object")
    if obj.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ParseError(
            f"unsupported report schema version {obj.get('schema_version')!r}"
        )
    try:
        m = obj["metrics"]
        row = MetricsRow(
            accuracy=float(m["accuracy"]),
            precision=float(m["precision"]),
            recall=float(m["recall"]),
            f1=float(m["f1"]),
            mcc=float(m["mcc"]),
            auc=float(m["auc"]),
            threshold=float(m["threshold"]),
            averaging=Averaging(m["averaging"]),
        )
        cm_obj = obj["confusion"]
        cm = ConfusionMatrix(
            tp=int(cm_obj["tp"]),
            fp=int(cm_obj["fp"]),
            tn=int(cm_obj["tn"]),
            fn=int(cm_obj["fn"]),
        )
        c = obj["calibration"]
        cal = ThresholdCalibration(
            model_id=str(c["model_id"]),
            threshold=float(c["threshold"]),
            youden_j=float(c["youden_j"]),
            tpr_at_opt=float(c["tpr_at_opt"]),
            fpr_at_opt=float(c["fpr_at_opt"]),
            calibrated_on=int(c["calibrated_on"]),
        )
        return EvaluationReport(
            model_id=str(obj["model_id"]),
            metrics=row,
            confusion=cm,
            calibration=cal,
            dataset_digest=str(obj["dataset_digest"]),
            config_echo=dict(obj.get("config_echo", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid report document: {exc}") from exc


def save_report(report: EvaluationReport, path: Path | str) -> None:
    atomic_write_text(path, report_to_json(report))


def load_report(path: Path | str) -> EvaluationReport:
    return report_from_json(read_text(path))


def export_confusion(cm: ConfusionMatrix) -> str:
    """Confusion matrix as a labeled 2x2 CSV grid (rows = truth, columns = prediction)."""
    return (
        ",pred_authentic,pred_tampered\n"
        f"true_authentic,{cm.tn},{cm.fp}\n"
        f"true_tampered,{cm.fn},{cm.tp}\n"
    )


@dataclass(frozen=True)
class ComparisonTable:
    """Per-model metric rows plus, per column, the set of models achieving the maximum."""

    rows: tuple[tuple[str, MetricsRow], ...]
    best: dict[str, tuple[str, ...]]

    def to_csv(self) -> str:
        lines = ["model_id," + ",".join(_COMPARE_COLUMNS) + ",best_in"]
        for model_id, row in self.rows:
            values = ",".join(
                format_real(getattr(row, col)) for col in _COMPARE_COLUMNS
            )
            best_in = ";".join(
                col for col in _COMPARE_COLUMNS if model_id in self.best[col]
            )
            lines.append(f"{model_id},{values},{best_in}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = ["model_id", *_COMPARE_COLUMNS]
        body = []
        for model_id, row in self.rows:
            cells = [model_id]
            for col in _COMPARE_COLUMNS:
                marker = "*" if model_id in self.best[col] else ""
                cells.append(f"{getattr(row, col):.3f}{marker}")
            body.append(cells)
        widths = [
            max(len(header[i]), *(len(r[i]) for r in body)) for i in range(len(header))
        ]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        for cells in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip())
        return "\n".join(lines) + "\n"


def compare_models(reports: Sequence[EvaluationReport]) -> ComparisonTable:
    """Build the column-wise comparison; ties mark every maximizing model."""
    if not reports:
        raise ValueError("compare_models needs at least one report")
    ordered = sorted(reports, key=lambda r: r.model_id)
    rows = tuple((r.model_id, r.metrics) for r in ordered)
    best: dict[str, tuple[str, ...]] = {}
    for col in _COMPARE_COLUMNS:
        top = max(getattr(row, col) for _, row in rows)
        best[col] = tuple(
            model_id for model_id, row in rows if getattr(row, col) == top
        )
    return ComparisonTable(rows, best)

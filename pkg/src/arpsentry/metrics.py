"""Confusion-matrix scoring and plot-ready evaluation outputs.

Packet-level accuracy is the primary metric; a per-window accuracy time
series and window-level confusion are reported alongside. Precision and
recall with zero denominators are reported as absent, never as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    accuracy: float
    fpr: Optional[float]
    precision: Optional[float]
    recall: Optional[float]

    def to_obj(self) -> dict:
        obj = {
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "tn": self.counts.tn,
                "fn": self.counts.fn,
            },
            "accuracy": round(self.accuracy, 6),
        }
        for name, value in (
            ("fpr", self.fpr),
            ("precision", self.precision),
            ("recall", self.recall),
        ):
            if value is not None:
                obj[name] = round(value, 6)
        return obj


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionCounts:
    if len(predictions) != len(labels):
        raise EvaluationError("prediction/label length mismatch")
    if not predictions:
        raise EvaluationError("nothing to score")
    tp = fp = tn = fn = 0
    for pred, label in zip(predictions, labels):
        if label is None:
            raise EvaluationError("evaluation requires labels")
        if label not in (0, 1) or pred not in (0, 1):
            raise EvaluationError("predictions and labels must be 0 or 1")
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1:
            fp += 1
        elif label == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def score(predictions: Sequence[int], labels: Sequence[int]) -> MetricsReport:
    c = confusion(predictions, labels)
    return MetricsReport(
        counts=c,
        accuracy=(c.tp + c.tn) / c.total,
        fpr=c.fp / (c.fp + c.tn) if (c.fp + c.tn) > 0 else None,
        precision=c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None,
        recall=c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None,
    )


def accuracy_over_time(
    predictions: Sequence[int],
    labels: Sequence[int],
    timestamps: Sequence[float],
    window: float,
) -> list[tuple[int, float]]:
    """Per-window packet accuracy; empty windows are omitted."""
    if window <= 0:
        raise EvaluationError("window length must be > 0")
    if not (len(predictions) == len(labels) == len(timestamps)):
        raise EvaluationError("prediction/label/timestamp length mismatch")
    totals: dict[int, int] = {}
    correct: dict[int, int] = {}
    for pred, label, ts in zip(predictions, labels, timestamps):
        if label is None:
            raise EvaluationError("evaluation requires labels")
        idx = int(ts // window)
        totals[idx] = totals.get(idx, 0) + 1
        if pred == label:
            correct[idx] = correct.get(idx, 0) + 1
    return [(idx, correct.get(idx, 0) / totals[idx]) for idx in sorted(totals)]


def write_metrics_json(report: MetricsReport, path, extra: Optional[dict] = None) -> None:
    obj = report.to_obj()
    if extra:
        obj.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_accuracy_csv(series: list[tuple[int, float]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("window,accuracy\n")
        for idx, acc in series:
            fh.write(f"{idx},{acc:.6f}\n")


def write_fpr_csv(rows: list[tuple[str, float]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("method,fpr\n")
        for method, fpr in rows:
            fh.write(f"{method},{fpr:.6f}\n")


def write_tau_sweep_csv(rows: list[tuple[float, int]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tau,directives\n")
        for tau, count in rows:
            fh.write(f"{tau:.6f},{count}\n")

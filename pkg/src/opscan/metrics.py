"""Binary classification quality measures: confusion matrix, accuracy /
precision / recall / F1, and ROC analysis.

The positive class is "vulnerable".  Undefined ratios (zero denominator)
are reported as None rather than a fake 0 or 100 percent.  ROC AUC is the
Mann-Whitney rank statistic with ties counted half, which coincides with
the trapezoidal area under the ROC polyline.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingleClass


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass
class MetricsReport:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    roc_auc: float | None = None

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items()}

    def summary(self) -> str:
        def pct(v):
            return "undefined" if v is None else f"{100.0 * v:.2f}%"
        return (f"accuracy {pct(self.accuracy)}  precision {pct(self.precision)}  "
                f"recall {pct(self.recall)}  f1 {pct(self.f1)}  "
                f"roc_auc {pct(self.roc_auc)}")


def confusion(pred, truth) -> ConfusionMatrix:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"pred {pred.shape} vs truth {truth.shape}")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (truth == 1))),
        fp=int(np.sum((pred == 1) & (truth == 0))),
        fn=int(np.sum((pred == 0) & (truth == 1))),
        tn=int(np.sum((pred == 0) & (truth == 0))),
    )


def _ratio(num, denom):
    return None if denom == 0 else num / denom


def scores(cm: ConfusionMatrix) -> MetricsReport:
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricsReport(accuracy=accuracy, precision=precision,
                         recall=recall, f1=f1)


def _tie_averaged_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    ranks[order] = np.arange(1, len(values) + 1)
    # average the ranks inside each tie group
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    sums = np.zeros(len(counts))
    np.add.at(sums, inverse, ranks)
    return sums[inverse] / counts[inverse]


def roc_auc(score_values, truth) -> float:
    """P(score of a random positive > score of a random negative), ties half."""
    s = np.asarray(score_values, dtype=np.float64)
    t = np.asarray(truth, dtype=np.int64)
    if s.shape != t.shape:
        raise LengthMismatch(f"scores {s.shape} vs truth {t.shape}")
    n_pos = int(np.sum(t == 1))
    n_neg = int(np.sum(t == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes present")
    ranks = _tie_averaged_ranks(s)
    rank_sum = float(np.sum(ranks[t == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_points(score_values, truth) -> list:
    """ROC polyline from (0,0) to (1,1), one vertex per distinct threshold."""
    s = np.asarray(score_values, dtype=np.float64)
    t = np.asarray(truth, dtype=np.int64)
    if s.shape != t.shape:
        raise LengthMismatch(f"scores {s.shape} vs truth {t.shape}")
    n_pos = int(np.sum(t == 1))
    n_neg = int(np.sum(t == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes present")

    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    t_sorted = t[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(s_sorted)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:  # whole tie group at once
            tp += int(t_sorted[j] == 1)
            fp += int(t_sorted[j] == 0)
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def trapezoid_area(points) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def full_report(pred, truth, score_values=None) -> tuple:
    """(ConfusionMatrix, MetricsReport, roc point list or None)."""
    cm = confusion(pred, truth)
    report = scores(cm)
    points = None
    if score_values is not None:
        try:
            report.roc_auc = roc_auc(score_values, truth)
            points = roc_points(score_values, truth)
        except SingleClass:
            report.roc_auc = None
    return cm, report, points


def write_report_json(path, cm: ConfusionMatrix, report: MetricsReport,
                      points=None, extra=None) -> None:
    payload = {"confusion": cm.as_dict(), "scores": report.as_dict()}
    if points is not None:
        payload["roc_points"] = [[float(x), float(y)] for x, y in points]
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_roc_csv(path, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for x, y in points:
            fh.write(f"{x},{y}\n")

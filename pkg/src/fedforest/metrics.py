"""Imbalance-aware binary classification metrics.

ROC AUC is built from the full threshold sweep (trapezoidal); its equality
with the pair-counting / Mann-Whitney formulation is enforced by tests.
PRAUC uses non-interpolated step areas (average-precision style).
"""

import math
from dataclasses import dataclass

import numpy as np


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ScoredLabels:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        l = np.asarray(self.labels, dtype=np.int64)
        if s.shape != l.shape or s.ndim != 1 or len(s) == 0:
            raise MetricsError("scores and labels must be equal-length, non-empty")
        if not np.isin(l, (0, 1)).all():
            raise MetricsError("labels must be 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", l)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int


def _curve_points(s: ScoredLabels):
    """Cumulative (tp, fp) after each distinct score, descending."""
    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    labels = s.labels[order]
    tp = np.cumsum(labels)
    fp = np.cumsum(1 - labels)
    # keep only the last index of each tied score block
    last = np.flatnonzero(np.diff(scores) != 0)
    keep = np.append(last, len(scores) - 1)
    return tp[keep], fp[keep]


def roc_auc(s: ScoredLabels) -> float:
    """Trapezoidal area under the ROC curve; ties count one half."""
    n_pos = int(s.labels.sum())
    n_neg = len(s.labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("roc_auc needs both classes")
    tp, fp = _curve_points(s)
    tpr = np.concatenate(([0.0], tp / n_pos))
    fpr = np.concatenate(([0.0], fp / n_neg))
    return float(np.trapezoid(tpr, fpr))


def pr_auc(s: ScoredLabels) -> float:
    """Step-wise (non-interpolated) area under the precision-recall curve."""
    n_pos = int(s.labels.sum())
    if n_pos == 0:
        raise MetricsError("pr_auc needs at least one positive")
    tp, fp = _curve_points(s)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * precision))


def mcc(c: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 for degenerate denominators."""
    tp, tn, fp, fn = c.tp, c.tn, c.fp, c.fn
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def confusion(s: ScoredLabels, threshold: float) -> ConfusionMatrix:
    """Binarize scores at `threshold` (>= means positive, matching
    forest label prediction) and count outcomes."""
    pred = s.scores >= threshold
    actual = s.labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & actual)),
        tn=int(np.sum(~pred & ~actual)),
        fp=int(np.sum(pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
    )

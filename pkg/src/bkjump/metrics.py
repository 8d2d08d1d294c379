"""ROC curves, AUC and the max(TP+TN) operating point."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class RocCurve:
    """Points ordered by descending threshold, starting at (inf, 0, 0)."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("both classes must be present")
    return s, y.astype(int)


def _cumulative_counts(s: np.ndarray, y: np.ndarray):
    """Distinct thresholds (descending) and TP/FP counts at score >= threshold."""
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    # last position of each run of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    tp = np.cumsum(y_sorted)[ends]
    fp = (ends + 1) - tp
    return s_sorted[ends], tp, fp


def roc(scores, labels) -> RocCurve:
    s, y = _check(scores, labels)
    thr, tp, fp = _cumulative_counts(s, y)
    n_pos, n_neg = int(y.sum()), int(y.size - y.sum())
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(np.r_[np.inf, thr], fpr, tpr, auc)


def auc(scores, labels) -> float:
    return roc(scores, labels).auc


def max_tp_tn(scores, labels) -> tuple[float, float]:
    """Best accuracy of the rule ``score >= t`` and the smallest t reaching it."""
    s, y = _check(scores, labels)
    thr, tp, fp = _cumulative_counts(s, y)
    n_neg = y.size - int(y.sum())
    correct = np.r_[n_neg, tp + (n_neg - fp)]
    thresholds = np.r_[np.inf, thr]
    best = correct.max()
    k = np.flatnonzero(correct == best)[-1]
    return float(best / y.size), float(thresholds[k])


def accuracy(scores, labels) -> float:
    return max_tp_tn(scores, labels)[0]

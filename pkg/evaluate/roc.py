"""
ROC curve over the distinct p_failed scores.

Points run from (0, 0) at threshold +inf to (1, 1) at the lowest score;
tied scores form one step. AUC is the trapezoid sum over the points.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from dataset.builder import CLASS_FAILED
from .metrics import EvaluationError, _check_predictions


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold: float


@dataclass(frozen=True)
class RocCurve:
    points: List[RocPoint]
    auc: float


def roc_curve(p_failed: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """
    Sweep the decision threshold over every distinct score

    Raises:
        EvaluationError: Empty input or a single class
    """
    scores, labels = _check_predictions(p_failed, labels)
    positive = labels == CLASS_FAILED
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC needs both Failed and Succeeded labels")

    order = np.argsort(-scores, kind='mergesort')
    sorted_scores = scores[order]
    sorted_positive = positive[order]
    tp = np.cumsum(sorted_positive)
    fp = np.cumsum(~sorted_positive)

    # last index of every run of tied scores
    ends = np.flatnonzero(np.diff(sorted_scores) != 0)
    ends = np.append(ends, sorted_scores.size - 1)

    fpr = np.concatenate(([0.0], fp[ends] / n_neg))
    tpr = np.concatenate(([0.0], tp[ends] / n_pos))
    thresholds = np.concatenate(([np.inf], sorted_scores[ends]))

    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    points = [RocPoint(float(f), float(t), float(h)) for f, t, h in zip(fpr, tpr, thresholds)]
    return RocCurve(points=points, auc=auc)

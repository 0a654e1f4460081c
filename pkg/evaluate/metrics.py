"""
Classification Metrics
======================
Confusion matrix and per-class rates with Failed as the positive class.
A task is predicted Failed when its p_failed reaches the threshold.
Rates whose denominator is zero are undefined (None), never 0.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from dataset.builder import CLASS_FAILED, CLASS_SUCCEEDED
from utils.errors import TaskseerError

DEFAULT_THRESHOLD = 0.5


class EvaluationError(TaskseerError):
    """Predictions cannot be scored"""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError(f"confusion counts must be non-negative: {self}")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: 'ConfusionMatrix') -> 'ConfusionMatrix':
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class ClassMetrics:
    precision_failed: Optional[float]
    recall_failed: Optional[float]
    error_failed: Optional[float]
    precision_succeeded: Optional[float]
    recall_succeeded: Optional[float]
    error_succeeded: Optional[float]
    total_error: Optional[float]
    accuracy: Optional[float]

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


def _check_predictions(p_failed: Sequence[float], labels: Sequence[int]):
    p_failed = np.asarray(p_failed, dtype=np.float64)
    labels = np.asarray(labels)
    if p_failed.shape != labels.shape:
        raise EvaluationError(f"{p_failed.size} scores for {labels.size} labels")
    if p_failed.size == 0:
        raise EvaluationError("no predictions to evaluate")
    if not np.isin(labels, (CLASS_FAILED, CLASS_SUCCEEDED)).all():
        raise EvaluationError("labels must be Failed or Succeeded")
    return p_failed, labels


def confusion_matrix(p_failed: Sequence[float], labels: Sequence[int],
                     threshold: float = DEFAULT_THRESHOLD) -> ConfusionMatrix:
    """
    Count outcomes with Failed as the positive class

    Args:
        p_failed: Predicted probability of failure per row
        labels: CLASS_FAILED / CLASS_SUCCEEDED per row
        threshold: Rows with p_failed >= threshold are predicted Failed

    Returns:
        ConfusionMatrix
    """
    p_failed, labels = _check_predictions(p_failed, labels)
    predicted_failed = p_failed >= threshold
    actual_failed = labels == CLASS_FAILED
    return ConfusionMatrix(
        tp=int(np.sum(predicted_failed & actual_failed)),
        fp=int(np.sum(predicted_failed & ~actual_failed)),
        tn=int(np.sum(~predicted_failed & ~actual_failed)),
        fn=int(np.sum(~predicted_failed & actual_failed)),
    )


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-class precision, recall and error rate plus total error and accuracy"""
    return ClassMetrics(
        precision_failed=_ratio(cm.tp, cm.tp + cm.fp),
        recall_failed=_ratio(cm.tp, cm.tp + cm.fn),
        error_failed=_ratio(cm.fn, cm.tp + cm.fn),
        precision_succeeded=_ratio(cm.tn, cm.tn + cm.fn),
        recall_succeeded=_ratio(cm.tn, cm.tn + cm.fp),
        error_succeeded=_ratio(cm.fp, cm.tn + cm.fp),
        total_error=_ratio(cm.fp + cm.fn, cm.n),
        accuracy=_ratio(cm.tp + cm.tn, cm.n),
    )

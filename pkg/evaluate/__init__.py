"""Evaluate package: confusion matrix, class metrics, ROC and report files"""

from .metrics import (
    DEFAULT_THRESHOLD,
    EvaluationError,
    ConfusionMatrix,
    ClassMetrics,
    confusion_matrix,
    class_metrics
)
from .roc import RocPoint, RocCurve, roc_curve
from .reports import (
    ROC_COLUMNS,
    IMPORTANCE_COLUMNS,
    metrics_payload,
    write_metrics_json,
    write_roc_csv,
    write_importance_csv
)

__all__ = [
    'DEFAULT_THRESHOLD',
    'EvaluationError',
    'ConfusionMatrix',
    'ClassMetrics',
    'confusion_matrix',
    'class_metrics',
    'RocPoint',
    'RocCurve',
    'roc_curve',
    'ROC_COLUMNS',
    'IMPORTANCE_COLUMNS',
    'metrics_payload',
    'write_metrics_json',
    'write_roc_csv',
    'write_importance_csv'
]

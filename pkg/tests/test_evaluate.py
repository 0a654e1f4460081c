import json

import numpy as np
import pandas as pd
import pytest

from dataset import CLASS_FAILED, CLASS_SUCCEEDED
from evaluate import (
    ConfusionMatrix,
    EvaluationError,
    IMPORTANCE_COLUMNS,
    ROC_COLUMNS,
    class_metrics,
    confusion_matrix,
    metrics_payload,
    roc_curve,
    write_importance_csv,
    write_metrics_json,
    write_roc_csv
)
from forest import VariableImportance

F = CLASS_FAILED
S = CLASS_SUCCEEDED


def test_class_metrics_from_counts():
    metrics = class_metrics(ConfusionMatrix(tp=88, fp=1, tn=99, fn=12))
    assert metrics.precision_failed == pytest.approx(88 / 89)
    assert metrics.recall_failed == pytest.approx(0.88)
    assert metrics.error_failed == pytest.approx(0.12)
    assert metrics.recall_succeeded == pytest.approx(0.99)
    assert metrics.total_error == pytest.approx(13 / 200)
    assert metrics.accuracy == pytest.approx(187 / 200)


def test_undefined_rates_are_none():
    metrics = class_metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=0))
    assert metrics.precision_failed is None
    assert metrics.recall_failed is None
    assert metrics.error_failed is None
    assert metrics.recall_succeeded == 1.0
    assert metrics.total_error == 0.0


def test_confusion_matrix_threshold():
    p_failed = [0.9, 0.5, 0.4, 0.1]
    labels = [F, S, F, S]
    assert confusion_matrix(p_failed, labels) == ConfusionMatrix(tp=1, fp=1, tn=1, fn=1)
    everything_failed = confusion_matrix(p_failed, labels, threshold=0.0)
    assert (everything_failed.tp, everything_failed.fp, everything_failed.tn, everything_failed.fn) == (2, 2, 0, 0)


def test_confusion_matrix_input_errors():
    with pytest.raises(EvaluationError):
        confusion_matrix([], [])
    with pytest.raises(EvaluationError):
        confusion_matrix([0.1, 0.2], [F])
    with pytest.raises(EvaluationError):
        confusion_matrix([0.1], [7])


def test_confusion_matrices_add():
    total = ConfusionMatrix(1, 2, 3, 4) + ConfusionMatrix(4, 3, 2, 1)
    assert total == ConfusionMatrix(5, 5, 5, 5)
    assert total.n == 20


def test_roc_of_perfect_ranking():
    roc = roc_curve([0.9, 0.8, 0.3, 0.1], [F, F, S, S])
    assert roc.auc == pytest.approx(1.0)
    assert (roc.points[0].fpr, roc.points[0].tpr) == (0.0, 0.0)
    assert (roc.points[-1].fpr, roc.points[-1].tpr) == (1.0, 1.0)


def test_roc_of_constant_scores():
    roc = roc_curve([0.5] * 6, [F, S, F, S, F, S])
    assert roc.auc == pytest.approx(0.5)
    assert len(roc.points) == 2


def test_roc_of_random_scores_is_near_chance():
    rng = np.random.default_rng(10)
    labels = rng.integers(0, 2, 10_000)
    roc = roc_curve(rng.random(10_000), labels)
    assert 0.48 <= roc.auc <= 0.52


def test_roc_is_monotone():
    rng = np.random.default_rng(1)
    roc = roc_curve(rng.random(50), rng.integers(0, 2, 50))
    fpr = [p.fpr for p in roc.points]
    tpr = [p.tpr for p in roc.points]
    assert fpr == sorted(fpr)
    assert tpr == sorted(tpr)


def test_roc_needs_both_classes():
    with pytest.raises(EvaluationError):
        roc_curve([0.2, 0.7], [F, F])


def test_report_writers(tmp_path):
    cm = ConfusionMatrix(tp=3, fp=1, tn=5, fn=1)
    payload = metrics_payload(cm, class_metrics(cm), 0.5, auc=0.9, split='Test', seed=7)
    path = write_metrics_json(tmp_path / 'out' / 'metrics.json', payload)
    loaded = json.loads(path.read_text(encoding='utf-8'))
    assert loaded['confusion_matrix'] == {'tp': 3, 'fp': 1, 'tn': 5, 'fn': 1}
    assert loaded['n'] == 10
    assert loaded['split'] == 'Test'
    assert loaded['metrics']['accuracy'] == pytest.approx(0.8)

    roc = write_roc_csv(tmp_path / 'roc.csv', roc_curve([0.9, 0.2, 0.6], [F, S, S]))
    frame = pd.read_csv(roc)
    assert list(frame.columns) == ROC_COLUMNS
    assert len(frame) == 4

    importance = write_importance_csv(tmp_path / 'importance.csv', [
        VariableImportance('RequestMemory', 4.0, 1.0, 0.8),
        VariableImportance('Owner', 1.0, 0.25, 0.2),
    ])
    frame = pd.read_csv(importance)
    assert list(frame.columns) == IMPORTANCE_COLUMNS
    assert frame['feature'].tolist() == ['RequestMemory', 'Owner']


def test_metrics_json_refuses_nan(tmp_path):
    with pytest.raises(ValueError):
        write_metrics_json(tmp_path / 'metrics.json', {'auc': float('nan')})

"""
Random Forest
=============
Bagged classification trees. Tree i draws its bootstrap sample and its
per-node feature samples from a generator seeded with (seed, i), so the
forest does not depend on how many threads build it.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from dataset.builder import CLASS_FAILED, CLASS_SUCCEEDED, Dataset, schema_fingerprint
from dataset.partition import assign_folds
from evaluate.metrics import (
    DEFAULT_THRESHOLD,
    ClassMetrics,
    ConfusionMatrix,
    class_metrics,
    confusion_matrix
)
from evaluate.roc import RocCurve, roc_curve
from .config import ForestConfig, ForestError
from .encoding import FeatureEncoding, encode_frame, encode_row, fit_encodings
from .tree import TreeNode, build_tree, iter_internal, predict_tree

logger = logging.getLogger(__name__)


class SchemaMismatchError(ForestError):
    """Rows do not conform to the schema the forest was trained on"""


@dataclass(frozen=True)
class Forest:
    trees: Tuple[TreeNode, ...]
    config: ForestConfig
    encodings: Tuple[FeatureEncoding, ...]
    fingerprint: str
    column: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.trees) != self.config.n_trees:
            raise ForestError(f"forest holds {len(self.trees)} trees, config says {self.config.n_trees}")
        if self.fingerprint != schema_fingerprint((e.name, e.kind) for e in self.encodings):
            raise ForestError("forest fingerprint does not match its feature encodings")
        object.__setattr__(self, 'column', {e.name: j for j, e in enumerate(self.encodings)})

    @property
    def feature_names(self) -> List[str]:
        return [encoding.name for encoding in self.encodings]


@dataclass(frozen=True)
class VariableImportance:
    feature: str
    relative: float
    scaled: float
    percentage: float


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_train: int
    n_holdout: int
    confusion: ConfusionMatrix
    metrics: ClassMetrics


@dataclass(frozen=True)
class CVReport:
    folds: List[FoldResult]
    p_failed: np.ndarray
    labels: np.ndarray
    fold: np.ndarray
    threshold: float
    confusion: ConfusionMatrix
    metrics: ClassMetrics
    roc: Optional[RocCurve]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'folds': [
                {
                    'fold': result.fold,
                    'n_train': result.n_train,
                    'n_holdout': result.n_holdout,
                    'confusion_matrix': result.confusion.to_dict(),
                    'metrics': result.metrics.to_dict(),
                }
                for result in self.folds
            ],
            'confusion_matrix': self.confusion.to_dict(),
            'metrics': self.metrics.to_dict(),
            'threshold': self.threshold,
            'auc': self.roc.auc if self.roc else None,
            'n': int(self.labels.size),
        }


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _check_trainable(ds: Dataset, config: ForestConfig) -> None:
    if ds.n_rows < 2:
        raise ForestError(f"need at least 2 training rows, got {ds.n_rows}")
    if np.unique(ds.labels).size < 2:
        raise ForestError("training data holds a single class")
    if not ds.features:
        raise ForestError("training data has no feature columns")
    config.check_features(len(ds.features))


def train(ds: Dataset, config: ForestConfig, threads: int = 1) -> Forest:
    """
    Train a forest on every row of ds

    Args:
        ds: Training rows (callers pass the Train subset)
        config: Forest hyperparameters
        threads: Trees built concurrently; the result is identical for any value

    Returns:
        Forest of config.n_trees trees

    Raises:
        ForestError: Fewer than 2 rows, one class only or mtries above the feature count
    """
    _check_trainable(ds, config)
    encodings = fit_encodings(ds)
    X = encode_frame(ds, encodings)
    labels = np.asarray(ds.labels)

    def grow(index: int) -> TreeNode:
        return build_tree(X, labels, encodings, config, tree_rng(config.seed, index))

    logger.info(f"Training {config.n_trees} trees on {ds.n_rows} rows x {len(encodings)} features "
                f"(depth {config.max_depth}, mtries {config.mtries}, threads {threads})")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            trees = tuple(executor.map(grow, range(config.n_trees)))
    else:
        trees = tuple(grow(index) for index in range(config.n_trees))

    return Forest(trees=trees, config=config, encodings=encodings, fingerprint=ds.fingerprint())


def _predict_matrix(forest: Forest, X: np.ndarray) -> np.ndarray:
    total = np.zeros(len(X), dtype=np.float64)
    for tree in forest.trees:
        total += predict_tree(tree, X, forest.column)
    return total / len(forest.trees)


def predict_dataset(forest: Forest, ds: Dataset) -> np.ndarray:
    """
    p_failed for every row of ds

    Raises:
        SchemaMismatchError: ds was built with a different (name, kind) schema
    """
    if ds.fingerprint() != forest.fingerprint:
        raise SchemaMismatchError(
            f"dataset schema {ds.fingerprint()} does not match forest schema {forest.fingerprint}"
        )
    return _predict_matrix(forest, encode_frame(ds, forest.encodings))


def predict(forest: Forest, row: Mapping[str, Any]) -> Tuple[float, float]:
    """
    (p_failed, p_succeeded) for one row of raw attribute values

    Absent attributes count as missing.

    Raises:
        SchemaMismatchError: Unknown attribute or a value of the wrong kind
    """
    unknown = set(row) - set(forest.column)
    if unknown:
        raise SchemaMismatchError(f"attributes not in the forest schema: {sorted(unknown)}")
    try:
        X = encode_row(row, forest.encodings)
    except TypeError as e:
        raise SchemaMismatchError(str(e)) from e
    p_failed = float(_predict_matrix(forest, X)[0])
    return p_failed, 1.0 - p_failed


def hard_labels(p_failed: np.ndarray) -> np.ndarray:
    """argmax of (p_failed, p_succeeded); ties go to Failed"""
    p_failed = np.asarray(p_failed, dtype=np.float64)
    return np.where(p_failed >= 1.0 - p_failed, CLASS_FAILED, CLASS_SUCCEEDED).astype(np.int8)


def cross_validate(ds: Dataset, config: ForestConfig, threads: int = 1,
                   threshold: float = DEFAULT_THRESHOLD) -> CVReport:
    """
    k-fold cross-validation with pooled holdout predictions

    Uses the fold assignment of ds when it has config.folds folds, otherwise
    assigns folds from config.seed.

    Raises:
        ForestError: A fold's training complement holds a single class
    """
    if config.folds < 2:
        raise ForestError(f"cross-validation needs at least 2 folds, got {config.folds}")
    if ds.n_folds != config.folds:
        ds = assign_folds(ds, config.folds, config.seed)

    p_failed = np.empty(ds.n_rows, dtype=np.float64)
    results = []
    for fold in range(config.folds):
        holdout = np.flatnonzero(ds.fold == fold)
        rest = np.flatnonzero(ds.fold != fold)
        train_part = ds.take(rest)
        if np.unique(train_part.labels).size < 2:
            raise ForestError(f"fold {fold}: training complement holds a single class")
        forest = train(train_part, config, threads)
        scores = predict_dataset(forest, ds.take(holdout))
        p_failed[holdout] = scores
        cm = confusion_matrix(scores, ds.labels[holdout], threshold)
        results.append(FoldResult(fold, rest.size, holdout.size, cm, class_metrics(cm)))
        logger.info(f"✓ Fold {fold}: {holdout.size} holdout rows, total error "
                    f"{results[-1].metrics.total_error}")

    labels = np.asarray(ds.labels)
    pooled = confusion_matrix(p_failed, labels, threshold)
    roc = roc_curve(p_failed, labels) if np.unique(labels).size == 2 else None
    return CVReport(
        folds=results,
        p_failed=p_failed,
        labels=labels,
        fold=np.asarray(ds.fold),
        threshold=threshold,
        confusion=pooled,
        metrics=class_metrics(pooled),
        roc=roc,
    )


def variable_importance(forest: Forest) -> List[VariableImportance]:
    """
    Impurity-gain importance: for each feature the sum of (node weight x Gini
    gain) over the internal nodes splitting on it, then scaled by the maximum
    and normalized to percentages. Sorted descending, ties by name.
    """
    relative: Dict[str, float] = {}
    for tree in forest.trees:
        for node in iter_internal(tree):
            relative[node.split.feature] = relative.get(node.split.feature, 0.0) + node.weight * node.gain

    if not relative:
        return []
    top = max(relative.values())
    total = sum(relative.values())
    ranked = sorted(relative.items(), key=lambda item: (-item[1], item[0]))
    return [
        VariableImportance(feature, value, value / top if top else 0.0, value / total if total else 0.0)
        for feature, value in ranked
    ]
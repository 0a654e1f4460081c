"""
Feature Matrix Builder
======================
Turns labeled TaskRecords into a mixed-type Dataset: one row per task, one
column per class-ad attribute that is not ignored.

Column kinds are inferred unless a FeatureSpec overrides them:
numeric values -> Numeric, booleans -> Boolean, anything else -> Categorical.
Missing values stay missing (NaN / NA / None); nothing is imputed.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from categorize.submissions import Outcome, label_of
from classad_ingest.history_parser import TaskRecord
from utils.errors import TaskseerError
from utils.helpers import stable_digest

logger = logging.getLogger(__name__)

# Class indices used by the label vector, the forest leaves and the metrics
CLASS_FAILED = 0
CLASS_SUCCEEDED = 1
CLASS_NAMES = (Outcome.FAILED.value, Outcome.SUCCEEDED.value)

# The label and the row identifiers never become features
ALWAYS_EXCLUDED = frozenset({'JobStatus', 'ClusterId', 'ProcId'})

DEFAULT_IGNORE_COLUMNS = (
    'id',
    'AutoClusterId',
    'CommittedTime',
    'CompletionDate',
    'ExitCode',
    'LastVacateTime',
    'RemoteSysCpu',
    'RemoteUserCpu',
    'RemoveReason',
)

DEFAULT_MAX_CATEGORIES = 10_000

META_COLUMNS = ('source_node', 'cluster_id', 'proc_id')


class DatasetError(TaskseerError):
    """The dataset cannot be built or is inconsistent"""


class FeatureKind(Enum):
    NUMERIC = 'Numeric'
    CATEGORICAL = 'Categorical'
    BOOLEAN = 'Boolean'


class Split(Enum):
    TRAIN = 'Train'
    VALID = 'Valid'
    TEST = 'Test'


SPLIT_ORDER = (Split.TRAIN, Split.VALID, Split.TEST)
SPLIT_CODES = {split: code for code, split in enumerate(SPLIT_ORDER)}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: Optional[FeatureKind] = None
    ignored: bool = False


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """
    Mixed-type feature matrix with binary labels and partition assignments

    frame holds one column per active feature (float64 with NaN, pandas
    "boolean" with NA, or object strings with None); labels use
    CLASS_FAILED / CLASS_SUCCEEDED; split holds SPLIT_CODES values.
    """
    features: Tuple[FeatureSpec, ...]
    frame: pd.DataFrame
    labels: np.ndarray
    row_meta: pd.DataFrame
    split: np.ndarray
    fold: np.ndarray
    n_folds: int = 0

    def __post_init__(self):
        n = len(self.labels)
        lengths = {len(self.frame), len(self.row_meta), len(self.split), len(self.fold)}
        if lengths != {n}:
            raise DatasetError(f"dataset vectors disagree on length: {sorted(lengths | {n})}")
        names = [spec.name for spec in self.features]
        if len(set(names)) != len(names) or list(self.frame.columns) != names:
            raise DatasetError("frame columns must match the unique feature names")
        if n and not np.isin(self.labels, (CLASS_FAILED, CLASS_SUCCEEDED)).all():
            raise DatasetError("labels must be Failed or Succeeded")

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def feature_names(self) -> List[str]:
        return [spec.name for spec in self.features]

    def kind_of(self, name: str) -> FeatureKind:
        for spec in self.features:
            if spec.name == name:
                return spec.kind
        raise KeyError(name)

    def missing(self, name: str) -> np.ndarray:
        return self.frame[name].isna().to_numpy()

    def fingerprint(self) -> str:
        """Hash of the ordered (name, kind) schema"""
        return schema_fingerprint((spec.name, spec.kind) for spec in self.features)

    def take(self, rows: Sequence[int]) -> 'Dataset':
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            features=self.features,
            frame=self.frame.iloc[rows].reset_index(drop=True),
            labels=_frozen(self.labels[rows]),
            row_meta=self.row_meta.iloc[rows].reset_index(drop=True),
            split=_frozen(self.split[rows]),
            fold=_frozen(self.fold[rows]),
            n_folds=self.n_folds,
        )

    def subset(self, split: Split) -> 'Dataset':
        """Rows assigned to one split-frame partition"""
        return self.take(np.flatnonzero(self.split == SPLIT_CODES[split]))

    def with_assignments(self, split: Optional[np.ndarray] = None,
                         fold: Optional[np.ndarray] = None,
                         n_folds: Optional[int] = None) -> 'Dataset':
        return replace(
            self,
            split=self.split if split is None else _frozen(split),
            fold=self.fold if fold is None else _frozen(fold),
            n_folds=self.n_folds if n_folds is None else n_folds,
        )


def schema_fingerprint(schema: Iterable[Tuple[str, FeatureKind]]) -> str:
    return stable_digest([[name, kind.value] for name, kind in schema])


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def infer_kind(values: Sequence) -> FeatureKind:
    """Numeric if every defined value is a number, Boolean if every one is a bool"""
    defined = [value for value in values if value is not None]
    if defined and all(_is_number(value) for value in defined):
        return FeatureKind.NUMERIC
    if defined and all(isinstance(value, bool) for value in defined):
        return FeatureKind.BOOLEAN
    return FeatureKind.CATEGORICAL


def _build_column(name: str, kind: FeatureKind, values: Sequence,
                  max_categories: int) -> pd.Series:
    if kind is FeatureKind.NUMERIC:
        bad = [value for value in values if value is not None and not _is_number(value)]
        if bad:
            raise DatasetError(f"column {name} declared Numeric but holds {bad[0]!r}")
        column = np.array([math.nan if value is None else float(value) for value in values],
                          dtype=np.float64)
        return pd.Series(column, name=name)

    if kind is FeatureKind.BOOLEAN:
        bad = [value for value in values if value is not None and not isinstance(value, bool)]
        if bad:
            raise DatasetError(f"column {name} declared Boolean but holds {bad[0]!r}")
        return pd.Series(pd.array([pd.NA if value is None else value for value in values],
                                  dtype='boolean'), name=name)

    column = [None if value is None else str(value) for value in values]
    distinct = len({value for value in column if value is not None})
    if distinct > max_categories:
        raise DatasetError(
            f"column {name} has {distinct} distinct categories (limit {max_categories}); "
            f"add it to the ignore list"
        )
    return pd.Series(column, dtype=object, name=name)


def build_dataset(tasks: Sequence[TaskRecord],
                  spec: Sequence[FeatureSpec] = (),
                  ignore: Iterable[str] = DEFAULT_IGNORE_COLUMNS,
                  max_categories: int = DEFAULT_MAX_CATEGORIES) -> Dataset:
    """
    Build the feature matrix for labeled tasks

    Args:
        tasks: Tasks labeled Failed or Succeeded
        spec: Per-column overrides (kind, ignored)
        ignore: Additional column names to leave out
        max_categories: Distinct-value limit for categorical columns

    Returns:
        Dataset with every row in Train and fold 0

    Raises:
        DatasetError: No rows, an undetermined label, a type clash or a
                      categorical column over the cardinality limit
    """
    if not tasks:
        raise DatasetError("cannot build a dataset from zero tasks")

    labels = []
    for task in tasks:
        outcome = label_of(task)
        if outcome is Outcome.INDETERMINATE:
            raise DatasetError(f"task {task.key} has no terminal outcome (JobStatus={task.job_status})")
        labels.append(CLASS_FAILED if outcome is Outcome.FAILED else CLASS_SUCCEEDED)

    overrides: Dict[str, FeatureSpec] = {item.name: item for item in spec}
    ignored = set(ignore) | {item.name for item in spec if item.ignored} | ALWAYS_EXCLUDED

    rows = [task.feature_attributes() for task in tasks]
    names = set(overrides)
    for attributes in rows:
        names.update(attributes)

    features: List[FeatureSpec] = []
    columns: Dict[str, pd.Series] = {}
    for name in sorted(names - ignored):
        values = [attributes.get(name) for attributes in rows]
        if all(value is None for value in values):
            logger.warning(f"Column {name} is undefined on every row, dropped")
            continue
        override = overrides.get(name)
        kind = override.kind if override and override.kind else infer_kind(values)
        columns[name] = _build_column(name, kind, values, max_categories)
        features.append(FeatureSpec(name=name, kind=kind))

    frame = pd.DataFrame(columns, index=pd.RangeIndex(len(tasks)))
    if not columns:
        frame = pd.DataFrame(index=pd.RangeIndex(len(tasks)))
    row_meta = pd.DataFrame({
        'source_node': [task.source_node for task in tasks],
        'cluster_id': np.array([task.cluster_id for task in tasks], dtype=np.int64),
        'proc_id': np.array([task.proc_id for task in tasks], dtype=np.int64),
    })

    logger.info(f"Built dataset: {len(tasks)} rows, {len(features)} feature columns")
    n = len(tasks)
    return Dataset(
        features=tuple(features),
        frame=frame,
        labels=_frozen(np.array(labels, dtype=np.int8)),
        row_meta=row_meta,
        split=_frozen(np.zeros(n, dtype=np.int8)),
        fold=_frozen(np.zeros(n, dtype=np.int64)),
    )


def dataset_from_columns(columns: Dict[str, Tuple[FeatureKind, Sequence]],
                         labels: Sequence[int],
                         row_meta: Optional[pd.DataFrame] = None,
                         max_categories: int = DEFAULT_MAX_CATEGORIES) -> Dataset:
    """
    Assemble a Dataset directly from typed column values (None = missing)

    Args:
        columns: name -> (kind, values), kept in the given order
        labels: CLASS_FAILED / CLASS_SUCCEEDED per row
        row_meta: Optional source_node / cluster_id / proc_id frame

    Returns:
        Dataset with every row in Train and fold 0
    """
    n = len(labels)
    series = {name: _build_column(name, kind, list(values), max_categories)
              for name, (kind, values) in columns.items()}
    frame = pd.DataFrame(series, index=pd.RangeIndex(n)) if series else pd.DataFrame(index=pd.RangeIndex(n))
    if row_meta is None:
        row_meta = pd.DataFrame({
            'source_node': ['synthetic'] * n,
            'cluster_id': np.zeros(n, dtype=np.int64),
            'proc_id': np.arange(n, dtype=np.int64),
        })
    return Dataset(
        features=tuple(FeatureSpec(name, kind) for name, (kind, _) in columns.items()),
        frame=frame,
        labels=_frozen(np.asarray(labels, dtype=np.int8)),
        row_meta=row_meta.reset_index(drop=True),
        split=_frozen(np.zeros(n, dtype=np.int8)),
        fold=_frozen(np.zeros(n, dtype=np.int64)),
    )

"""Dataset package: training population, feature matrix and partitions"""

from .builder import (
    CLASS_FAILED,
    CLASS_SUCCEEDED,
    CLASS_NAMES,
    ALWAYS_EXCLUDED,
    DEFAULT_IGNORE_COLUMNS,
    DEFAULT_MAX_CATEGORIES,
    META_COLUMNS,
    SPLIT_CODES,
    SPLIT_ORDER,
    DatasetError,
    FeatureKind,
    FeatureSpec,
    Split,
    Dataset,
    schema_fingerprint,
    infer_kind,
    build_dataset,
    dataset_from_columns
)
from .population import DEFAULT_MIN_TASKS, Population, select_training_population
from .partition import (
    DEFAULT_SPLIT_RATIOS,
    PartitionError,
    validate_ratios,
    split_sizes,
    split_frame,
    assign_folds
)

__all__ = [
    'CLASS_FAILED',
    'CLASS_SUCCEEDED',
    'CLASS_NAMES',
    'ALWAYS_EXCLUDED',
    'DEFAULT_IGNORE_COLUMNS',
    'DEFAULT_MAX_CATEGORIES',
    'META_COLUMNS',
    'SPLIT_CODES',
    'SPLIT_ORDER',
    'DatasetError',
    'FeatureKind',
    'FeatureSpec',
    'Split',
    'Dataset',
    'schema_fingerprint',
    'infer_kind',
    'build_dataset',
    'dataset_from_columns',
    'DEFAULT_MIN_TASKS',
    'Population',
    'select_training_population',
    'DEFAULT_SPLIT_RATIOS',
    'PartitionError',
    'validate_ratios',
    'split_sizes',
    'split_frame',
    'assign_folds'
]

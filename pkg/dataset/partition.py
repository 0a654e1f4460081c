"""
Partitions
==========
Split-frame (Train / Valid / Test by exact quota) and k-fold assignment.
Both shuffle rows with a numpy Generator seeded from (seed, stream) so the
two assignments are independent for one user seed.
"""

import logging
import math
from typing import Tuple

import numpy as np

from .builder import SPLIT_CODES, Dataset, DatasetError, Split

logger = logging.getLogger(__name__)

DEFAULT_SPLIT_RATIOS = (0.6, 0.3, 0.1)

_SPLIT_STREAM = 1
_FOLD_STREAM = 2


class PartitionError(DatasetError):
    """Rows cannot be partitioned as requested"""


def validate_ratios(ratios: Tuple[float, float, float]) -> Tuple[float, float, float]:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise PartitionError(f"expected three split ratios, got {len(ratios)}")
    if any(not math.isfinite(r) or r <= 0 for r in ratios):
        raise PartitionError(f"split ratios must be positive: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise PartitionError(f"split ratios must sum to 1, got {sum(ratios)!r}")
    return ratios


def split_sizes(n: int, ratios: Tuple[float, float, float] = DEFAULT_SPLIT_RATIOS) -> Tuple[int, int, int]:
    """
    Exact quota sizes (train, valid, test)

    Valid and Test get floor(r * n), at least one row each; Train takes the rest.
    """
    _, r_valid, r_test = validate_ratios(ratios)
    if n < 3:
        raise PartitionError(f"cannot populate three partitions from {n} rows")
    n_valid = max(1, math.floor(r_valid * n + 1e-9))
    n_test = max(1, math.floor(r_test * n + 1e-9))
    n_train = n - n_valid - n_test
    if n_train < 1:
        raise PartitionError(f"ratios {ratios} leave no training rows for n={n}")
    return n_train, n_valid, n_test


def split_frame(ds: Dataset, ratios: Tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
                seed: int = 0) -> Dataset:
    """
    Assign every row to Train, Valid or Test

    Args:
        ds: Dataset
        ratios: (train, valid, test) fractions summing to 1
        seed: RNG seed

    Returns:
        New Dataset with the split vector assigned
    """
    n_train, n_valid, _ = split_sizes(ds.n_rows, ratios)
    order = np.random.default_rng([seed, _SPLIT_STREAM]).permutation(ds.n_rows)

    split = np.full(ds.n_rows, SPLIT_CODES[Split.TEST], dtype=np.int8)
    split[order[:n_train]] = SPLIT_CODES[Split.TRAIN]
    split[order[n_train:n_train + n_valid]] = SPLIT_CODES[Split.VALID]

    logger.info(f"Split frame: train={n_train} valid={n_valid} test={ds.n_rows - n_train - n_valid}")
    return ds.with_assignments(split=split)


def assign_folds(ds: Dataset, k: int, seed: int = 0) -> Dataset:
    """Seeded shuffle, then round-robin fold ids; fold sizes differ by at most 1"""
    if k < 2:
        raise PartitionError(f"need at least 2 folds, got {k}")
    if k > ds.n_rows:
        raise PartitionError(f"cannot make {k} folds from {ds.n_rows} rows")

    order = np.random.default_rng([seed, _FOLD_STREAM]).permutation(ds.n_rows)
    fold = np.empty(ds.n_rows, dtype=np.int64)
    fold[order] = np.arange(ds.n_rows) % k
    return ds.with_assignments(fold=fold, n_folds=k)

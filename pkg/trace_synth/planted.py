"""
Planted-Signal Datasets
=======================
Feature matrices whose labels are decided by a single known feature, then
flipped with a fixed probability. The flip rate is the Bayes error, so a
forest trained on them has a known target accuracy and a known most
important feature.
"""

import logging
from typing import Tuple

import numpy as np

from dataset.builder import CLASS_FAILED, CLASS_SUCCEEDED, Dataset, FeatureKind, dataset_from_columns

logger = logging.getLogger(__name__)

NOISE_CATEGORIES = ('c0', 'c1', 'c2', 'c3', 'c4')


def planted_signal_dataset(n_rows: int,
                           n_noise_features: int,
                           signal: Tuple[str, float] = ('signal', 1.0),
                           noise_rate: float = 0.0,
                           seed: int = 0) -> Tuple[Dataset, np.ndarray]:
    """
    Generate a dataset with one informative feature and independent noise

    The signal feature is +-(separation / 2 + U(0, 1)), positive for Failed.
    Noise features are N(0, 1) except every third one, which is categorical
    over five levels.

    Args:
        n_rows: Number of rows
        n_noise_features: Independent, uninformative features
        signal: (feature name, separation between the class ranges)
        noise_rate: Probability of flipping each observed label, in [0, 0.5)
        seed: RNG seed

    Returns:
        (Dataset with observed labels, true labels before flipping)

    Raises:
        ValueError: Bad sizes or noise_rate outside [0, 0.5)
    """
    if n_rows < 1:
        raise ValueError(f"n_rows must be positive, got {n_rows}")
    if n_noise_features < 0:
        raise ValueError(f"n_noise_features must be non-negative, got {n_noise_features}")
    if not 0.0 <= noise_rate < 0.5:
        raise ValueError(f"noise_rate must be within [0, 0.5), got {noise_rate}")
    name, separation = signal
    if separation < 0:
        raise ValueError(f"separation must be non-negative, got {separation}")

    rng = np.random.default_rng(seed)
    failed = rng.random(n_rows) < 0.5
    true_labels = np.where(failed, CLASS_FAILED, CLASS_SUCCEEDED).astype(np.int8)
    sign = np.where(failed, 1.0, -1.0)
    signal_values = sign * (separation / 2.0 + rng.random(n_rows))

    flipped = rng.random(n_rows) < noise_rate
    observed = np.where(flipped, 1 - true_labels, true_labels).astype(np.int8)

    columns = {name: (FeatureKind.NUMERIC, signal_values.tolist())}
    for index in range(n_noise_features):
        noise_name = f"noise_{index:02d}"
        if index % 3 == 2:
            codes = rng.integers(0, len(NOISE_CATEGORIES), n_rows)
            columns[noise_name] = (FeatureKind.CATEGORICAL, [NOISE_CATEGORIES[c] for c in codes])
        else:
            columns[noise_name] = (FeatureKind.NUMERIC, rng.normal(0.0, 1.0, n_rows).tolist())

    logger.debug(f"Planted {name} over {n_rows} rows, {int(flipped.sum())} labels flipped")
    ordered = {key: columns[key] for key in sorted(columns)}
    return dataset_from_columns(ordered, observed), true_labels

"""
Feature encoding for the tree learner.

Every column becomes a float64 vector with NaN for missing. Categorical and
Boolean values become indices into a sorted vocabulary; values outside the
vocabulary encode as NaN and are routed like missing values.
"""

from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from dataset.builder import Dataset, FeatureKind

BOOLEAN_VOCABULARY = ('False', 'True')


@dataclass(frozen=True)
class FeatureEncoding:
    name: str
    kind: FeatureKind
    categories: Tuple[str, ...] = ()

    @property
    def is_numeric(self) -> bool:
        return self.kind is FeatureKind.NUMERIC


def fit_encodings(ds: Dataset) -> Tuple[FeatureEncoding, ...]:
    """Vocabularies from the rows of ds, in column order"""
    encodings = []
    for spec in ds.features:
        if spec.kind is FeatureKind.NUMERIC:
            encodings.append(FeatureEncoding(spec.name, spec.kind))
        elif spec.kind is FeatureKind.BOOLEAN:
            encodings.append(FeatureEncoding(spec.name, spec.kind, BOOLEAN_VOCABULARY))
        else:
            values = ds.frame[spec.name].dropna().unique()
            encodings.append(FeatureEncoding(spec.name, spec.kind, tuple(sorted(str(v) for v in values))))
    return tuple(encodings)


def _encode_series(series: pd.Series, encoding: FeatureEncoding) -> np.ndarray:
    if encoding.kind is FeatureKind.NUMERIC:
        return series.to_numpy(dtype=np.float64, na_value=np.nan)
    if encoding.kind is FeatureKind.BOOLEAN:
        return series.astype('boolean').to_numpy(dtype=np.float64, na_value=np.nan)
    codes = pd.Categorical(series, categories=list(encoding.categories)).codes.astype(np.float64)
    codes[codes < 0] = np.nan
    return codes


def encode_frame(ds: Dataset, encodings: Sequence[FeatureEncoding]) -> np.ndarray:
    """Encoded (n_rows, n_features) matrix in encoding order"""
    matrix = np.empty((ds.n_rows, len(encodings)), dtype=np.float64)
    for j, encoding in enumerate(encodings):
        matrix[:, j] = _encode_series(ds.frame[encoding.name], encoding)
    return matrix


def encode_value(value: Any, encoding: FeatureEncoding) -> float:
    """
    Encode one raw attribute value

    Raises:
        TypeError: value has the wrong type for a Numeric or Boolean column
    """
    if value is None:
        return np.nan
    if encoding.kind is FeatureKind.NUMERIC:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{encoding.name} is Numeric, got {value!r}")
        return float(value)
    if encoding.kind is FeatureKind.BOOLEAN:
        if not isinstance(value, bool):
            raise TypeError(f"{encoding.name} is Boolean, got {value!r}")
        return float(value)
    try:
        return float(encoding.categories.index(str(value)))
    except ValueError:
        return np.nan


def encode_row(row: Mapping[str, Any], encodings: Sequence[FeatureEncoding]) -> np.ndarray:
    return np.array([[encode_value(row.get(e.name), e) for e in encodings]], dtype=np.float64)

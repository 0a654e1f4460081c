"""
Dataset Store
=============
A Dataset on disk is a directory with two files:

- schema.json: format version, features (name, kind), fingerprint, class,
  split and fold metadata
- data.csv: one row per task; feature columns in schema order followed by
  the row identifiers, label, split and fold

Missing values are written as \\N. A string that itself starts with a
backslash gets one more in front. Floats use repr() so they read back
bit-identical.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from dataset.builder import (
    CLASS_NAMES,
    SPLIT_CODES,
    SPLIT_ORDER,
    Dataset,
    DatasetError,
    FeatureKind,
    FeatureSpec,
    Split,
)

logger = logging.getLogger(__name__)

DATASET_FORMAT = 'taskseer-dataset v1'
SCHEMA_FILE = 'schema.json'
DATA_FILE = 'data.csv'
MISSING = '\\N'

LABEL_COLUMN = '__label__'
SPLIT_COLUMN = '__split__'
FOLD_COLUMN = '__fold__'
META_CSV_COLUMNS = {
    'source_node': '__source_node__',
    'cluster_id': '__cluster_id__',
    'proc_id': '__proc_id__',
}
RESERVED_COLUMNS = (*META_CSV_COLUMNS.values(), LABEL_COLUMN, SPLIT_COLUMN, FOLD_COLUMN)


class DatasetStoreError(DatasetError):
    """Dataset directory is missing, unreadable or inconsistent"""


def _escape(text: str) -> str:
    return '\\' + text if text.startswith('\\') else text


def _unescape(cell: str):
    if cell == MISSING:
        return None
    return cell[1:] if cell.startswith('\\\\') else cell


def _encode_column(series: pd.Series, kind: FeatureKind) -> List[str]:
    if kind is FeatureKind.NUMERIC:
        return [MISSING if math.isnan(value) else repr(float(value)) for value in series.to_numpy()]
    if kind is FeatureKind.BOOLEAN:
        return [MISSING if value is pd.NA else ('true' if value else 'false') for value in series.array]
    return [MISSING if value is None else _escape(value) for value in series]


def _decode_column(cells: pd.Series, kind: FeatureKind, name: str) -> list:
    values = []
    for cell in cells:
        value = _unescape(cell)
        if value is None:
            values.append(None)
        elif kind is FeatureKind.NUMERIC:
            try:
                values.append(float(value))
            except ValueError as e:
                raise DatasetStoreError(f"column {name}: {value!r} is not a number") from e
        elif kind is FeatureKind.BOOLEAN:
            if value not in ('true', 'false'):
                raise DatasetStoreError(f"column {name}: {value!r} is not a boolean")
            values.append(value == 'true')
        else:
            values.append(value)
    return values


def save_dataset(ds: Dataset, directory: Union[str, Path]) -> Path:
    """
    Write a Dataset directory (schema.json + data.csv)

    Args:
        ds: Dataset to persist
        directory: Target directory, created if needed

    Returns:
        The directory path
    """
    directory = Path(directory)
    clash = set(ds.feature_names) & set(RESERVED_COLUMNS)
    if clash:
        raise DatasetStoreError(f"feature names collide with reserved columns: {sorted(clash)}")
    directory.mkdir(parents=True, exist_ok=True)

    schema = {
        'format': DATASET_FORMAT,
        'fingerprint': ds.fingerprint(),
        'features': [{'name': spec.name, 'kind': spec.kind.value} for spec in ds.features],
        'classes': list(CLASS_NAMES),
        'splits': [split.value for split in SPLIT_ORDER],
        'n_folds': ds.n_folds,
        'n_rows': ds.n_rows,
        'label_column': LABEL_COLUMN,
        'split_column': SPLIT_COLUMN,
        'fold_column': FOLD_COLUMN,
    }
    with open(directory / SCHEMA_FILE, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(schema, handle, indent=2, ensure_ascii=False)
        handle.write('\n')

    columns: Dict[str, List[str]] = {
        spec.name: _encode_column(ds.frame[spec.name], spec.kind) for spec in ds.features
    }
    columns[META_CSV_COLUMNS['source_node']] = [_escape(node) for node in ds.row_meta['source_node']]
    columns[META_CSV_COLUMNS['cluster_id']] = [str(int(v)) for v in ds.row_meta['cluster_id']]
    columns[META_CSV_COLUMNS['proc_id']] = [str(int(v)) for v in ds.row_meta['proc_id']]
    columns[LABEL_COLUMN] = [CLASS_NAMES[label] for label in ds.labels]
    columns[SPLIT_COLUMN] = [SPLIT_ORDER[code].value for code in ds.split]
    columns[FOLD_COLUMN] = [str(int(fold)) for fold in ds.fold]

    pd.DataFrame(columns, dtype=object).to_csv(directory / DATA_FILE, index=False, lineterminator='\n')
    logger.info(f"✓ Saved dataset ({ds.n_rows} rows, {len(ds.features)} features) to {directory}")
    return directory


def load_dataset(directory: Union[str, Path]) -> Dataset:
    """
    Read a Dataset directory written by save_dataset

    Raises:
        DatasetStoreError: Missing files, unknown format or inconsistent content
    """
    directory = Path(directory)
    try:
        with open(directory / SCHEMA_FILE, 'r', encoding='utf-8') as handle:
            schema = json.load(handle)
        raw = pd.read_csv(directory / DATA_FILE, dtype=str, keep_default_na=False, na_filter=False)
    except (OSError, ValueError) as e:
        raise DatasetStoreError(f"cannot read dataset at {directory}: {e}") from e

    if schema.get('format') != DATASET_FORMAT:
        raise DatasetStoreError(f"unsupported dataset format {schema.get('format')!r}")

    try:
        features = tuple(FeatureSpec(item['name'], FeatureKind(item['kind'])) for item in schema['features'])
        frame = pd.DataFrame(
            {spec.name: _column_series(raw, spec) for spec in features},
            index=pd.RangeIndex(len(raw)),
        )
        row_meta = pd.DataFrame({
            'source_node': [_unescape(cell) for cell in raw[META_CSV_COLUMNS['source_node']]],
            'cluster_id': raw[META_CSV_COLUMNS['cluster_id']].astype(np.int64).to_numpy(),
            'proc_id': raw[META_CSV_COLUMNS['proc_id']].astype(np.int64).to_numpy(),
        })
        labels = np.array([CLASS_NAMES.index(name) for name in raw[LABEL_COLUMN]], dtype=np.int8)
        split = np.array([SPLIT_CODES[Split(name)] for name in raw[SPLIT_COLUMN]], dtype=np.int8)
        fold = raw[FOLD_COLUMN].astype(np.int64).to_numpy()
    except (KeyError, ValueError) as e:
        raise DatasetStoreError(f"malformed dataset at {directory}: {e}") from e

    if not features:
        frame = pd.DataFrame(index=pd.RangeIndex(len(raw)))
    for array in (labels, split, fold):
        array.setflags(write=False)

    ds = Dataset(
        features=features,
        frame=frame,
        labels=labels,
        row_meta=row_meta,
        split=split,
        fold=fold,
        n_folds=int(schema.get('n_folds', 0)),
    )
    if ds.fingerprint() != schema.get('fingerprint'):
        raise DatasetStoreError(f"dataset fingerprint mismatch in {directory}")
    logger.info(f"Loaded dataset ({ds.n_rows} rows, {len(features)} features) from {directory}")
    return ds


def _column_series(raw: pd.DataFrame, spec: FeatureSpec) -> pd.Series:
    values = _decode_column(raw[spec.name], spec.kind, spec.name)
    if spec.kind is FeatureKind.NUMERIC:
        return pd.Series([math.nan if v is None else v for v in values], dtype=np.float64, name=spec.name)
    if spec.kind is FeatureKind.BOOLEAN:
        return pd.Series(pd.array([pd.NA if v is None else v for v in values], dtype='boolean'), name=spec.name)
    return pd.Series(values, dtype=object, name=spec.name)

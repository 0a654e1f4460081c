"""Class-ad ingest package: condor_history JSON to normalized task records"""

from .history_parser import (
    AdValue,
    ClassAd,
    TaskRecord,
    ParsedHistory,
    HistoryParseError,
    NormalizationError,
    coerce_ad_value,
    parse_history_stream,
    normalize_task
)
from .task_merge import (
    MergeResult,
    FileStats,
    IngestResult,
    merge_sources,
    source_node_for,
    parse_history_argument,
    ingest_files,
    parse_time_bound,
    filter_completion_window
)

__all__ = [
    'AdValue',
    'ClassAd',
    'TaskRecord',
    'ParsedHistory',
    'HistoryParseError',
    'NormalizationError',
    'coerce_ad_value',
    'parse_history_stream',
    'normalize_task',
    'MergeResult',
    'FileStats',
    'IngestResult',
    'merge_sources',
    'source_node_for',
    'parse_history_argument',
    'ingest_files',
    'parse_time_bound',
    'filter_completion_window'
]

"""Procfs sampler package: per-process readers and the process-tree poll loop"""

from .readers import (
    PROC_ROOT,
    IO_KEYS,
    IoCounters,
    StatRecord,
    ProcfsParseError,
    TransientMissError,
    ProcfsAccessError,
    parse_stat,
    read_io,
    read_stat,
    read_statm,
    read_oom_score,
    child_pids
)
from .sampler import (
    STREAM_FORMAT,
    MIN_INTERVAL_MS,
    DEFAULT_INTERVAL_MS,
    PidReading,
    Anomaly,
    ProcSample,
    TargetGoneError,
    SinkError,
    system_constants,
    sample_tree,
    poll,
    snapshot
)

__all__ = [
    'PROC_ROOT',
    'IO_KEYS',
    'IoCounters',
    'StatRecord',
    'ProcfsParseError',
    'TransientMissError',
    'ProcfsAccessError',
    'parse_stat',
    'read_io',
    'read_stat',
    'read_statm',
    'read_oom_score',
    'child_pids',
    'STREAM_FORMAT',
    'MIN_INTERVAL_MS',
    'DEFAULT_INTERVAL_MS',
    'PidReading',
    'Anomaly',
    'ProcSample',
    'TargetGoneError',
    'SinkError',
    'system_constants',
    'sample_tree',
    'poll',
    'snapshot'
]

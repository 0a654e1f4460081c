"""
Process-Tree Sampler
====================
Samples a target process and all of its descendants, summing io, cpu and
resident memory into one ProcSample per tick.

Output stream (JSONL): one header line with the tick rate, page size, root
pid and start time, then one line per sample. Clock ticks and pages are
written raw.
"""

import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TextIO, Tuple, Union

from utils.errors import TaskseerError
from utils.helpers import IntervalPacer, MonotonicEpochClock
from .readers import (
    CUMULATIVE_IO_KEYS,
    IoCounters,
    StatRecord,
    TransientMissError,
    child_pids,
    proc_path,
    read_io,
    read_oom_score,
    read_stat,
    read_statm
)

logger = logging.getLogger(__name__)

STREAM_FORMAT = 'taskseer-procfs v1'
MIN_INTERVAL_MS = 10
DEFAULT_INTERVAL_MS = 1000

SNAPSHOT_FILES = ('cmdline', 'environ', 'status', 'wchan', 'mounts')


class TargetGoneError(TaskseerError):
    """The root process no longer exists"""


class SinkError(TaskseerError):
    """Samples cannot be written to the output stream"""


@dataclass(frozen=True)
class PidReading:
    pid: int
    io: IoCounters
    stat: StatRecord
    rss_pages: int
    oom_score: int


@dataclass(frozen=True)
class Anomaly:
    """A cumulative counter that went backwards between two samples"""
    pid: int
    counter: str
    previous: int
    current: int


@dataclass(frozen=True)
class ProcSample:
    timestamp: int
    root_pid: int
    pids: Tuple[int, ...]
    io: IoCounters
    utime: int
    stime: int
    rss_pages: int
    oom_scores: Dict[int, int]
    misses: Tuple[int, ...] = ()
    anomalies: Tuple[Anomaly, ...] = ()
    per_pid: Tuple[PidReading, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'timestamp': self.timestamp,
            'root_pid': self.root_pid,
            'pids': list(self.pids),
            'io': self.io.to_dict(),
            'cpu': {'utime': self.utime, 'stime': self.stime},
            'rss_pages': self.rss_pages,
            'oom_scores': {str(pid): score for pid, score in self.oom_scores.items()},
            'misses': list(self.misses),
            'anomalies': [
                {'pid': a.pid, 'counter': a.counter, 'previous': a.previous, 'current': a.current}
                for a in self.anomalies
            ],
        }


def system_constants() -> Tuple[int, int]:
    """(clock ticks per second, page size in bytes) of this host"""
    try:
        tick_rate = os.sysconf('SC_CLK_TCK')
    except (AttributeError, ValueError, OSError):
        tick_rate = 100
    try:
        page_size = os.sysconf('SC_PAGE_SIZE')
    except (AttributeError, ValueError, OSError):
        page_size = 4096
    return int(tick_rate), int(page_size)


def _read_pid(root: Union[str, Path], pid: int) -> PidReading:
    return PidReading(
        pid=pid,
        io=read_io(root, pid),
        stat=read_stat(root, pid),
        rss_pages=read_statm(root, pid),
        oom_score=read_oom_score(root, pid),
    )


def _find_anomalies(readings: Tuple[PidReading, ...], previous: Optional[ProcSample]) -> Tuple[Anomaly, ...]:
    if previous is None:
        return ()
    before = {reading.pid: reading for reading in previous.per_pid}
    anomalies = []
    for reading in readings:
        old = before.get(reading.pid)
        # a different starttime means the pid was reused
        if old is None or old.stat.starttime != reading.stat.starttime:
            continue
        pairs = [(key, getattr(old.io, key), getattr(reading.io, key)) for key in CUMULATIVE_IO_KEYS]
        pairs += [('utime', old.stat.utime, reading.stat.utime), ('stime', old.stat.stime, reading.stat.stime)]
        for counter, was, now in pairs:
            if now < was:
                anomalies.append(Anomaly(reading.pid, counter, was, now))
    if anomalies:
        logger.warning(f"{len(anomalies)} cumulative counters decreased since the previous sample")
    return tuple(anomalies)


def sample_tree(root: Union[str, Path], pid: int,
                clock: Optional[Callable[[], int]] = None,
                previous: Optional[ProcSample] = None) -> ProcSample:
    """
    Read the target and its descendants once

    Args:
        root: procfs root (/proc or a fixture directory)
        pid: Target process id
        clock: Epoch-millisecond clock
        previous: Prior sample, used to flag counters that decreased

    Returns:
        ProcSample; descendants that vanish mid-sample are listed in misses

    Raises:
        TargetGoneError: The target process is absent or vanished
        ProcfsAccessError: A procfs file of the tree is not readable
    """
    if not proc_path(root, pid).is_dir():
        raise TargetGoneError(f"process {pid} not found under {root}")
    clock = clock or MonotonicEpochClock()
    timestamp = clock()

    try:
        root_reading = _read_pid(root, pid)
    except TransientMissError as e:
        raise TargetGoneError(f"process {pid} vanished: {e}") from e

    readings = [root_reading]
    misses = []
    for child in child_pids(root, pid):
        try:
            readings.append(_read_pid(root, child))
        except TransientMissError as e:
            logger.debug(f"Missed pid {child}: {e}")
            misses.append(child)

    io = IoCounters()
    for reading in readings:
        io = io + reading.io
    readings = tuple(readings)
    return ProcSample(
        timestamp=timestamp,
        root_pid=pid,
        pids=tuple(reading.pid for reading in readings),
        io=io,
        utime=sum(reading.stat.utime for reading in readings),
        stime=sum(reading.stat.stime for reading in readings),
        rss_pages=sum(reading.rss_pages for reading in readings),
        oom_scores={reading.pid: reading.oom_score for reading in readings},
        misses=tuple(misses),
        anomalies=_find_anomalies(readings, previous),
        per_pid=readings,
    )


def _write_line(sink: TextIO, payload: Dict[str, Any]) -> None:
    try:
        sink.write(json.dumps(payload, sort_keys=True) + '\n')
        sink.flush()
    except (OSError, ValueError) as e:
        raise SinkError(f"cannot write sample: {e}") from e


def poll(root: Union[str, Path], pid: int, interval_ms: int, sink: TextIO,
         clock: Optional[Callable[[], int]] = None,
         sleep: Optional[Callable[[float], None]] = None,
         max_samples: Optional[int] = None) -> int:
    """
    Sample the process tree every interval_ms until the target exits

    Args:
        root: procfs root
        pid: Target process id
        interval_ms: Tick interval (>= 10)
        sink: Text stream receiving the JSONL header and samples
        clock: Epoch-millisecond clock
        sleep: Sleep function (seconds)
        max_samples: Stop after this many samples

    Returns:
        Number of samples written

    Raises:
        ValueError: interval_ms below 10
        TargetGoneError: The target does not exist at start
        ProcfsAccessError: The tree cannot be read by this user
        SinkError: Writing to the sink failed
    """
    if interval_ms < MIN_INTERVAL_MS:
        raise ValueError(f"interval_ms must be at least {MIN_INTERVAL_MS}, got {interval_ms}")
    if not proc_path(root, pid).is_dir():
        raise TargetGoneError(f"process {pid} not found under {root}")

    clock = clock or MonotonicEpochClock()
    pacer = IntervalPacer(interval_ms, clock=clock, sleep=sleep)
    tick_rate, page_size = system_constants()
    _write_line(sink, {
        'format': STREAM_FORMAT,
        'tick_rate': tick_rate,
        'page_size': page_size,
        'root_pid': pid,
        'start_time_ms': clock(),
        'root': str(root),
        'interval_ms': interval_ms,
    })

    count = 0
    previous: Optional[ProcSample] = None
    while max_samples is None or count < max_samples:
        pacer.wait()
        try:
            sample = sample_tree(root, pid, clock, previous)
        except TargetGoneError as e:
            logger.info(f"✓ Target finished after {count} samples ({e})")
            break
        if previous is not None and sample.timestamp <= previous.timestamp:
            sample = _restamp(sample, previous.timestamp + 1)
        _write_line(sink, sample.to_dict())
        previous = sample
        count += 1
    return count


def _restamp(sample: ProcSample, timestamp: int) -> ProcSample:
    return replace(sample, timestamp=timestamp)


def snapshot(root: Union[str, Path], pid: int) -> Dict[str, Any]:
    """
    Once-at-start context of the target: cmdline, environ, status, wchan,
    mounts, cwd and open fd count. Unreadable entries are None.
    """
    result: Dict[str, Any] = {'pid': pid}
    for name in SNAPSHOT_FILES:
        try:
            with open(proc_path(root, pid, name), 'rb') as handle:
                raw = handle.read()
        except OSError:
            result[name] = None
            continue
        text = raw.decode('utf-8', errors='replace')
        if name in ('cmdline', 'environ'):
            result[name] = [part for part in text.split('\0') if part]
        else:
            result[name] = text
    try:
        result['cwd'] = os.readlink(proc_path(root, pid, 'cwd'))
    except OSError:
        result['cwd'] = None
    try:
        result['fd_count'] = len(os.listdir(proc_path(root, pid, 'fd')))
    except OSError:
        result['fd_count'] = None
    return result

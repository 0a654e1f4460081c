"""
Procfs Readers
==============
Parsers for the per-process files under <root>/<pid>/: io, stat, statm,
oom_score and task/<tid>/children. The root defaults to /proc and can point
at a fixture directory laid out the same way.

A file that disappears (the process exited) raises TransientMissError, one
this user may not read raises ProcfsAccessError, and content that does not
parse raises ProcfsParseError naming the file.
"""

import logging
import os
from collections import deque
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Union

from utils.errors import TaskseerError

logger = logging.getLogger(__name__)

PROC_ROOT = '/proc'

IO_KEYS = ('rchar', 'wchar', 'syscr', 'syscw', 'read_bytes', 'write_bytes', 'cancelled_write_bytes')

# Counters that must never decrease for a live process
CUMULATIVE_IO_KEYS = ('rchar', 'wchar')

# Offsets into the fields that follow "pid (comm)"
STAT_STATE = 0
STAT_PPID = 1
STAT_UTIME = 11
STAT_STIME = 12
STAT_NUM_THREADS = 17
STAT_STARTTIME = 19


class ProcfsParseError(TaskseerError):
    """A procfs file exists but its content is malformed"""


class TransientMissError(TaskseerError):
    """A procfs file vanished, typically because the process exited"""


class ProcfsAccessError(TaskseerError):
    """A procfs file exists but this user may not read it"""


@dataclass(frozen=True)
class IoCounters:
    rchar: int = 0
    wchar: int = 0
    syscr: int = 0
    syscw: int = 0
    read_bytes: int = 0
    write_bytes: int = 0
    cancelled_write_bytes: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def __add__(self, other: 'IoCounters') -> 'IoCounters':
        return IoCounters(**{key: getattr(self, key) + getattr(other, key) for key in IO_KEYS})

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class StatRecord:
    pid: int
    comm: str
    state: str
    ppid: int
    utime: int
    stime: int
    num_threads: int
    starttime: int

    def __post_init__(self):
        if self.pid <= 0:
            raise ValueError(f"pid must be positive, got {self.pid}")
        if self.utime < 0 or self.stime < 0:
            raise ValueError("utime and stime must be non-negative")

    def to_dict(self) -> Dict[str, Union[int, str]]:
        return asdict(self)


def proc_path(root: Union[str, Path], pid: int, *parts: str) -> Path:
    return Path(root, str(pid), *parts)


def _read_text(path: Path) -> str:
    try:
        with open(path, 'r', encoding='utf-8', errors='replace') as handle:
            return handle.read()
    except (FileNotFoundError, ProcessLookupError, NotADirectoryError) as e:
        raise TransientMissError(f"{path} is gone: {e}") from e
    except PermissionError as e:
        raise ProcfsAccessError(f"{path} is not readable: {e}") from e


def read_io(root: Union[str, Path], pid: int) -> IoCounters:
    """
    Parse <root>/<pid>/io

    Returns:
        IoCounters with all seven keys; unknown keys are ignored

    Raises:
        TransientMissError: File absent
        ProcfsAccessError: File not readable by this user
        ProcfsParseError: Malformed line or a required key missing
    """
    path = proc_path(root, pid, 'io')
    values: Dict[str, int] = {}
    for number, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition(':')
        if not sep:
            raise ProcfsParseError(f"{path}:{number}: expected 'key: value', got {line!r}")
        try:
            values[key.strip()] = int(value.strip())
        except ValueError as e:
            raise ProcfsParseError(f"{path}:{number}: bad value in {line!r}") from e

    missing = [key for key in IO_KEYS if key not in values]
    if missing:
        raise ProcfsParseError(f"{path}: missing keys {missing}")
    try:
        return IoCounters(**{key: values[key] for key in IO_KEYS})
    except ValueError as e:
        raise ProcfsParseError(f"{path}: {e}") from e


def parse_stat(text: str, source: str = 'stat') -> StatRecord:
    """comm sits between the first '(' and the last ')'; it may contain both"""
    text = text.strip()
    open_paren = text.find('(')
    close_paren = text.rfind(')')
    if open_paren < 0 or close_paren < open_paren:
        raise ProcfsParseError(f"{source}: no '(comm)' section in {text[:60]!r}")

    rest = text[close_paren + 1:].split()
    if len(rest) <= STAT_STARTTIME:
        raise ProcfsParseError(f"{source}: only {len(rest) + 2} fields")
    try:
        return StatRecord(
            pid=int(text[:open_paren].strip()),
            comm=text[open_paren + 1:close_paren],
            state=rest[STAT_STATE],
            ppid=int(rest[STAT_PPID]),
            utime=int(rest[STAT_UTIME]),
            stime=int(rest[STAT_STIME]),
            num_threads=int(rest[STAT_NUM_THREADS]),
            starttime=int(rest[STAT_STARTTIME]),
        )
    except ValueError as e:
        raise ProcfsParseError(f"{source}: {e}") from e


def read_stat(root: Union[str, Path], pid: int) -> StatRecord:
    path = proc_path(root, pid, 'stat')
    return parse_stat(_read_text(path), str(path))


def read_statm(root: Union[str, Path], pid: int) -> int:
    """Resident pages: second field of <root>/<pid>/statm"""
    path = proc_path(root, pid, 'statm')
    parts = _read_text(path).split()
    if len(parts) < 2:
        raise ProcfsParseError(f"{path}: expected at least 2 fields, got {len(parts)}")
    try:
        return int(parts[1])
    except ValueError as e:
        raise ProcfsParseError(f"{path}: {e}") from e


def read_oom_score(root: Union[str, Path], pid: int) -> int:
    path = proc_path(root, pid, 'oom_score')
    try:
        return int(_read_text(path).strip())
    except ValueError as e:
        raise ProcfsParseError(f"{path}: {e}") from e


def child_pids(root: Union[str, Path], pid: int) -> List[int]:
    """
    All descendants of pid, breadth first

    Walks <root>/<pid>/task/<tid>/children for every thread. Missing
    children files count as empty.
    """
    seen = {pid}
    found: List[int] = []
    queue = deque([pid])
    while queue:
        current = queue.popleft()
        task_dir = proc_path(root, current, 'task')
        try:
            tids = sorted(int(name) for name in os.listdir(task_dir) if name.isdigit())
        except OSError:
            continue
        for tid in tids:
            try:
                text = _read_text(task_dir / str(tid) / 'children')
            except TransientMissError:
                continue
            for token in text.split():
                if not token.isdigit():
                    logger.debug(f"Ignoring child token {token!r} under {task_dir / str(tid)}")
                    continue
                child = int(token)
                if child not in seen:
                    seen.add(child)
                    found.append(child)
                    queue.append(child)
    return found

"""
Fake procfs trees for tests and demos: writes <root>/<pid>/{io,stat,statm,
oom_score,cmdline,status} and task/<pid>/children in the kernel's text formats.
"""

import shutil
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .readers import (
    IO_KEYS,
    STAT_NUM_THREADS,
    STAT_PPID,
    STAT_STARTTIME,
    STAT_STATE,
    STAT_STIME,
    STAT_UTIME,
    IoCounters,
    StatRecord,
    proc_path
)

# Fields after "pid (comm)" in a modern kernel's stat line
STAT_REST_FIELDS = 50


def serialize_io(io: IoCounters) -> str:
    return ''.join(f"{key}: {getattr(io, key)}\n" for key in IO_KEYS)


def serialize_stat(stat: StatRecord) -> str:
    rest = ['0'] * STAT_REST_FIELDS
    rest[STAT_STATE] = stat.state
    rest[STAT_PPID] = str(stat.ppid)
    rest[STAT_UTIME] = str(stat.utime)
    rest[STAT_STIME] = str(stat.stime)
    rest[STAT_NUM_THREADS] = str(stat.num_threads)
    rest[STAT_STARTTIME] = str(stat.starttime)
    return f"{stat.pid} ({stat.comm}) {' '.join(rest)}\n"


def serialize_statm(rss_pages: int, size_pages: int = 0) -> str:
    size_pages = max(size_pages, rss_pages)
    return f"{size_pages} {rss_pages} 0 0 0 0 0\n"


def write_process(root: Union[str, Path], stat: StatRecord, io: IoCounters,
                  rss_pages: int = 0, oom_score: int = 0,
                  children: Iterable[int] = (), cmdline: Sequence[str] = ()) -> Path:
    """Create (or overwrite) one fake process directory"""
    directory = proc_path(root, stat.pid)
    task_dir = directory / 'task' / str(stat.pid)
    task_dir.mkdir(parents=True, exist_ok=True)
    (directory / 'io').write_text(serialize_io(io), encoding='utf-8')
    (directory / 'stat').write_text(serialize_stat(stat), encoding='utf-8')
    (directory / 'statm').write_text(serialize_statm(rss_pages), encoding='utf-8')
    (directory / 'oom_score').write_text(f"{oom_score}\n", encoding='utf-8')
    (directory / 'cmdline').write_bytes(''.join(f"{arg}\0" for arg in cmdline).encode('utf-8'))
    (directory / 'status').write_text(f"Name:\t{stat.comm}\nState:\t{stat.state}\nPid:\t{stat.pid}\n"
                                      f"PPid:\t{stat.ppid}\nThreads:\t{stat.num_threads}\n",
                                      encoding='utf-8')
    write_children(root, stat.pid, children)
    return directory


def write_children(root: Union[str, Path], pid: int, children: Iterable[int], tid: Optional[int] = None) -> None:
    task_dir = proc_path(root, pid, 'task', str(tid or pid))
    task_dir.mkdir(parents=True, exist_ok=True)
    text = ' '.join(str(child) for child in children)
    (task_dir / 'children').write_text(f"{text} " if text else '', encoding='utf-8')


def remove_process(root: Union[str, Path], pid: int) -> None:
    shutil.rmtree(proc_path(root, pid), ignore_errors=True)

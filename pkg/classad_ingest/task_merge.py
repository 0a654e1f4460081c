"""
Task Merging
============
Combines normalized tasks from several submit nodes into one deduplicated
store. ClusterId is only unique per schedd, so the key is
(source_node, ClusterId, ProcId); among duplicates the record with the
latest CompletionDate wins.
"""

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from dateutil import parser as date_parser

from utils.errors import UsageError
from utils.helpers import canonical_json
from .history_parser import NormalizationError, TaskRecord, normalize_task, parse_history_stream

logger = logging.getLogger(__name__)

_HISTORY_STEM = re.compile(r'^history[_-](?P<node>.+)$')


@dataclass
class MergeResult:
    records: List[TaskRecord] = field(default_factory=list)
    duplicates: int = 0


@dataclass
class FileStats:
    path: str
    source_node: str
    retained: int
    skipped: int
    total: int


@dataclass
class IngestResult:
    records: List[TaskRecord]
    files: List[FileStats]
    duplicates: int


def _precedence(record: TaskRecord):
    completion = record.completion_date
    # The serialized form breaks CompletionDate ties independently of input order
    return (-math.inf if completion is None else completion, canonical_json(record.to_dict()))


def merge_sources(per_node_lists: Iterable[Tuple[str, Sequence[TaskRecord]]]) -> MergeResult:
    """
    Concatenate per-node task lists, deduplicating on (source_node, cluster_id, proc_id)

    Args:
        per_node_lists: (source_node, records) pairs in any order

    Returns:
        MergeResult with records sorted by key and the number of dropped duplicates
    """
    kept: Dict[Tuple[str, int, int], TaskRecord] = {}
    duplicates = 0

    for source_node, records in per_node_lists:
        for record in records:
            if record.source_node != source_node:
                record = replace(record, source_node=source_node)
            current = kept.get(record.key)
            if current is None:
                kept[record.key] = record
                continue
            duplicates += 1
            if _precedence(record) > _precedence(current):
                kept[record.key] = record

    if duplicates:
        logger.info(f"Merged away {duplicates} duplicate task records")
    return MergeResult(records=[kept[key] for key in sorted(kept)], duplicates=duplicates)


def source_node_for(path: Union[str, Path]) -> str:
    """Derive the submit-node name from a history file name (history_<node>.json)"""
    stem = Path(path).stem
    match = _HISTORY_STEM.match(stem)
    return match.group('node') if match else stem


def parse_history_argument(argument: str) -> Tuple[str, Path]:
    """Split a NODE=path argument; bare paths take the node from the file name"""
    if '=' in argument:
        node, _, path = argument.partition('=')
        if not node or not path:
            raise UsageError(f"Bad history argument: {argument!r}")
        return node, Path(path)
    return source_node_for(argument), Path(argument)


def _load_file(source_node: str, path: Path) -> Tuple[List[TaskRecord], FileStats]:
    try:
        handle = open(path, 'rb')
    except OSError as e:
        raise UsageError(f"cannot read history file {path}: {e.strerror or e}") from e
    with handle:
        parsed = parse_history_stream(handle, source=str(path))
    records = []
    rejected = 0
    for ad in parsed.ads:
        try:
            records.append(normalize_task(ad, source_node))
        except NormalizationError as e:
            logger.warning(f"{path}: ad {ad.get('ClusterId')!r}.{ad.get('ProcId')!r} skipped, {e}")
            rejected += 1
    if rejected:
        logger.warning(f"{path}: {rejected} ads failed normalization")
    stats = FileStats(str(path), source_node, len(records), parsed.skipped + rejected, parsed.total)
    logger.info(f"✓ {path}: {stats.retained} tasks retained, {stats.skipped} skipped")
    return records, stats


def ingest_files(sources: Sequence[Tuple[str, Path]], threads: int = 1) -> IngestResult:
    """
    Parse, normalize and merge several history files

    Args:
        sources: (source_node, path) pairs
        threads: Parallel file parsers; the merged result does not depend on it

    Returns:
        IngestResult with merged records and per-file counts
    """
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        loaded = list(pool.map(lambda item: _load_file(*item), sources))

    merged = merge_sources((node, records) for (node, _), (records, _) in zip(sources, loaded))
    return IngestResult(
        records=merged.records,
        files=[stats for _, stats in loaded],
        duplicates=merged.duplicates,
    )


def parse_time_bound(value: Union[str, int, float, None]) -> Optional[float]:
    """
    Convert a window bound to epoch seconds

    Args:
        value: Epoch number, numeric string, or any date dateutil understands
               (naive dates are taken as UTC)

    Returns:
        Epoch seconds, or None when no bound is given
    """
    if value is None or value == '':
        return None
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        moment = date_parser.parse(text)
    except (ValueError, OverflowError) as e:
        raise UsageError(f"Cannot parse date bound {value!r}: {e}") from e
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.timestamp()


def filter_completion_window(tasks: Iterable[TaskRecord],
                             since: Union[str, float, None] = None,
                             until: Union[str, float, None] = None) -> List[TaskRecord]:
    """Keep tasks whose CompletionDate lies inside [since, until]"""
    lower = parse_time_bound(since)
    upper = parse_time_bound(until)
    tasks = list(tasks)
    if lower is None and upper is None:
        return tasks

    kept = []
    for task in tasks:
        completion = task.completion_date
        if completion is None:
            continue
        if lower is not None and completion < lower:
            continue
        if upper is not None and completion > upper:
            continue
        kept.append(task)

    logger.info(f"Completion window kept {len(kept)} of {len(tasks)} tasks")
    return kept

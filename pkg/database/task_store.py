"""
Flat-file Task Store
Persists normalized TaskRecords as JSONL, one task per line, for streaming re-reads
"""

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Union

from classad_ingest.history_parser import TaskRecord
from utils.errors import TaskseerError, UsageError

logger = logging.getLogger(__name__)


class TaskStoreError(TaskseerError):
    """Unreadable or malformed task store line"""


class TaskStore:
    """JSONL store of TaskRecords keyed by (source_node, cluster_id, proc_id)"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def write_tasks(self, records: Iterable[TaskRecord]) -> int:
        """
        Write all records, replacing any previous store content

        Args:
            records: Task records in the order they should be stored

        Returns:
            Number of records written
        """
        self.path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with open(self.path, 'w', encoding='utf-8', newline='\n') as handle:
            for record in records:
                handle.write(json.dumps(record.to_dict(), ensure_ascii=False))
                handle.write('\n')
                count += 1
        logger.info(f"✓ Stored {count} tasks in {self.path}")
        return count

    def iter_tasks(self) -> Iterator[TaskRecord]:
        """Stream records back in stored order"""
        try:
            handle = open(self.path, 'r', encoding='utf-8')
        except OSError as e:
            raise UsageError(f"cannot read task store {self.path}: {e.strerror or e}") from e
        with handle:
            for line_number, line in enumerate(handle, 1):
                if not line.strip():
                    continue
                try:
                    yield TaskRecord.from_dict(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise TaskStoreError(f"{self.path}:{line_number}: bad task record: {e}") from e

    def read_tasks(self) -> List[TaskRecord]:
        return list(self.iter_tasks())

    def get_statistics(self) -> Dict[str, int]:
        """Task counts per submit node"""
        counts = Counter(record.source_node for record in self.iter_tasks())
        return dict(sorted(counts.items()))


def write_tasks(path: Union[str, Path], records: Iterable[TaskRecord]) -> int:
    return TaskStore(path).write_tasks(records)


def read_tasks(path: Union[str, Path]) -> List[TaskRecord]:
    return TaskStore(path).read_tasks()

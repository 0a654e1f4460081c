"""Database package: flat-file stores for tasks and datasets"""

from .task_store import TaskStore, TaskStoreError, write_tasks, read_tasks
from .dataset_store import (
    DATASET_FORMAT,
    DatasetStoreError,
    save_dataset,
    load_dataset
)

__all__ = [
    'TaskStore',
    'TaskStoreError',
    'write_tasks',
    'read_tasks',
    'DATASET_FORMAT',
    'DatasetStoreError',
    'save_dataset',
    'load_dataset'
]

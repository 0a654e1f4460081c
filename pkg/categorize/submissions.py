"""
Submission Categorizer
======================
Groups tasks by submission (all tasks sharing a ClusterId on one submit
node) and assigns one of five submission categories:

1. single task, succeeded
2. single task, failed
3. multiple tasks, mixed outcomes
4. multiple tasks, all succeeded
5. multiple tasks, all failed

Only terminal statuses carry an outcome: JobStatus 4 (completed) is a
success and JobStatus 3 (removed) a failure. Anything else is
indeterminate; it counts as a failure for categorization and is kept out
of the modeling dataset.
"""

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from classad_ingest.history_parser import TaskRecord

JOB_STATUS_REMOVED = 3
JOB_STATUS_COMPLETED = 4


class Outcome(Enum):
    FAILED = 'Failed'
    SUCCEEDED = 'Succeeded'
    INDETERMINATE = 'Indeterminate'


class Category(Enum):
    SINGLE_SUCCESS = 'SingleSuccess'
    SINGLE_FAIL = 'SingleFail'
    MULTI_ALL_SUCCESS = 'MultiAllSuccess'
    MULTI_ALL_FAIL = 'MultiAllFail'
    MULTI_MIXED = 'MultiMixed'


# Row order and wording of the submissions breakdown table
CATEGORY_REPORT_ORDER = (
    Category.SINGLE_SUCCESS,
    Category.SINGLE_FAIL,
    Category.MULTI_MIXED,
    Category.MULTI_ALL_SUCCESS,
    Category.MULTI_ALL_FAIL,
)

CATEGORY_DESCRIPTIONS: Dict[Category, Tuple[str, str]] = {
    Category.SINGLE_SUCCESS: ('single', 'successfully completed'),
    Category.SINGLE_FAIL: ('single', 'failed'),
    Category.MULTI_MIXED: ('multi', 'combo success and failed'),
    Category.MULTI_ALL_SUCCESS: ('multi', 'all successfully completed'),
    Category.MULTI_ALL_FAIL: ('multi', 'all failed'),
}


def label_of(task: TaskRecord) -> Outcome:
    """Outcome of a task from its terminal JobStatus"""
    if task.job_status == JOB_STATUS_COMPLETED:
        return Outcome.SUCCEEDED
    if task.job_status == JOB_STATUS_REMOVED:
        return Outcome.FAILED
    return Outcome.INDETERMINATE


@dataclass(frozen=True)
class SubmissionGroup:
    """All tasks of one submission with the category derived from them"""
    cluster_id: int
    source_node: str
    tasks: Tuple[TaskRecord, ...]
    category: Category

    def __post_init__(self):
        if not self.tasks:
            raise ValueError("a submission group needs at least one task")
        for task in self.tasks:
            if (task.source_node, task.cluster_id) != (self.source_node, self.cluster_id):
                raise ValueError(
                    f"task {task.key} does not belong to submission "
                    f"({self.source_node}, {self.cluster_id})"
                )

    @property
    def key(self) -> Tuple[str, int]:
        return (self.source_node, self.cluster_id)

    def __len__(self) -> int:
        return len(self.tasks)


def classify_submission(group: Union[SubmissionGroup, Sequence[TaskRecord]]) -> Category:
    """
    Assign the submission category

    Args:
        group: A SubmissionGroup or the tasks of one submission

    Returns:
        Category; indeterminate tasks count as failures

    Raises:
        ValueError: Empty group
    """
    tasks = group.tasks if isinstance(group, SubmissionGroup) else tuple(group)
    if not tasks:
        raise ValueError("cannot classify an empty submission")

    succeeded = sum(1 for task in tasks if label_of(task) is Outcome.SUCCEEDED)
    if len(tasks) == 1:
        return Category.SINGLE_SUCCESS if succeeded else Category.SINGLE_FAIL
    if succeeded == len(tasks):
        return Category.MULTI_ALL_SUCCESS
    if succeeded == 0:
        return Category.MULTI_ALL_FAIL
    return Category.MULTI_MIXED


def group_by_submission(tasks: Iterable[TaskRecord]) -> List[SubmissionGroup]:
    """
    Partition tasks into submissions keyed by (source_node, cluster_id)

    Args:
        tasks: Normalized task records

    Returns:
        Groups sorted by key, tasks within a group sorted by ProcId
    """
    buckets: Dict[Tuple[str, int], List[TaskRecord]] = defaultdict(list)
    for task in tasks:
        buckets[(task.source_node, task.cluster_id)].append(task)

    groups = []
    for (source_node, cluster_id) in sorted(buckets):
        members = tuple(sorted(buckets[(source_node, cluster_id)], key=lambda t: t.proc_id))
        groups.append(SubmissionGroup(
            cluster_id=cluster_id,
            source_node=source_node,
            tasks=members,
            category=classify_submission(members),
        ))
    return groups

"""
Training Population
===================
Modeling rows come from mixed-outcome multi-task submissions only: a
submission qualifies when its category is MultiMixed and it holds at least
min_tasks tasks (inclusive cutoff).
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

from categorize.submissions import Category, Outcome, SubmissionGroup, label_of
from classad_ingest.history_parser import TaskRecord

logger = logging.getLogger(__name__)

DEFAULT_MIN_TASKS = 5


@dataclass(frozen=True)
class Population:
    tasks: List[TaskRecord]
    submissions: int
    dropped_indeterminate: int


def select_training_population(groups: Sequence[SubmissionGroup],
                               min_tasks: int = DEFAULT_MIN_TASKS) -> Population:
    """
    Select the tasks of qualifying submissions

    Args:
        groups: Categorized submissions
        min_tasks: Minimum submission size (>= 2)

    Returns:
        Population with tasks in group order; tasks without a terminal
        outcome are dropped and counted
    """
    if min_tasks < 2:
        raise ValueError(f"min_tasks must be at least 2, got {min_tasks}")

    tasks: List[TaskRecord] = []
    submissions = 0
    dropped = 0
    for group in groups:
        if group.category is not Category.MULTI_MIXED or len(group.tasks) < min_tasks:
            continue
        submissions += 1
        for task in group.tasks:
            if label_of(task) is Outcome.INDETERMINATE:
                dropped += 1
            else:
                tasks.append(task)

    if dropped:
        logger.warning(f"Dropped {dropped} tasks without a terminal outcome")
    logger.info(f"Selected {len(tasks)} tasks from {submissions} submissions (>= {min_tasks} tasks, mixed outcome)")
    return Population(tasks=tasks, submissions=submissions, dropped_indeterminate=dropped)

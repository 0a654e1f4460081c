"""
Breakdown Reports
=================
Builds the trace summary tables:

- tasks breakdown: succeeded vs. error tasks
- errors breakdown: failed tasks per FailureKind
- submissions breakdown: submissions and tasks per Category
- usage summary: cumulative / average / max / min of numeric attributes
- tasks per submission: histogram of submission sizes

Percentages are rounded to one decimal place.
"""

import logging
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd

from classad_ingest.history_parser import TaskRecord
from utils.helpers import is_finite_number, percent
from .failures import (
    DEFAULT_FAILURE_RULES,
    FAILURE_DESCRIPTIONS,
    FailureKind,
    FailureRules,
    classify_failure
)
from .submissions import (
    CATEGORY_DESCRIPTIONS,
    CATEGORY_REPORT_ORDER,
    Category,
    Outcome,
    SubmissionGroup,
    label_of
)

logger = logging.getLogger(__name__)

# Task usage rows: CPU, system CPU, user CPU, suspension, bytes sent
DEFAULT_USAGE_ATTRIBUTES = (
    'RemoteWallClockTime',
    'RemoteSysCpu',
    'RemoteUserCpu',
    'CumulativeSuspensionTime',
    'BytesSent',
)

REPORT_FILES = {
    'tasks': 'tasks_breakdown.csv',
    'errors': 'errors_breakdown.csv',
    'submissions': 'submissions_breakdown.csv',
    'usage': 'usage_summary.csv',
    'sizes': 'tasks_per_submission.csv',
}


@dataclass(frozen=True)
class UsageStat:
    """Aggregates of one numeric attribute; aggregates are None when count is 0"""
    attribute: str
    cumulative: Optional[float]
    average: Optional[float]
    max: Optional[float]
    min: Optional[float]
    count: int
    excluded: int = 0


@dataclass
class BreakdownTables:
    tasks: pd.DataFrame
    errors: pd.DataFrame
    submissions: pd.DataFrame
    failure_counts: Dict[FailureKind, int]
    category_counts: Dict[Category, int]
    category_task_counts: Dict[Category, int]


def usage_summary(tasks: Iterable[TaskRecord], attribute: str) -> UsageStat:
    """
    Aggregate one numeric class-ad attribute over the tasks that define it

    Args:
        tasks: Task records
        attribute: Class-ad attribute name, e.g. RemoteUserCpu

    Returns:
        UsageStat; tasks with an undefined or non-numeric value are counted in excluded
    """
    values = []
    excluded = 0
    for task in tasks:
        value = task.feature_attributes().get(attribute)
        if is_finite_number(value):
            values.append(value)
        else:
            excluded += 1

    if not values:
        logger.warning(f"Attribute {attribute} is never defined; usage aggregates undefined")
        return UsageStat(attribute, None, None, None, None, 0, excluded)

    if excluded:
        logger.info(f"{attribute}: {excluded} tasks without a value excluded")

    cumulative = sum(values)
    return UsageStat(
        attribute=attribute,
        cumulative=cumulative,
        average=cumulative / len(values),
        max=max(values),
        min=min(values),
        count=len(values),
        excluded=excluded,
    )


def usage_table(tasks: Sequence[TaskRecord],
                attributes: Sequence[str] = DEFAULT_USAGE_ATTRIBUTES) -> pd.DataFrame:
    rows = [asdict(usage_summary(tasks, attribute)) for attribute in attributes]
    columns = ['attribute', 'cumulative', 'average', 'max', 'min', 'count', 'excluded']
    return pd.DataFrame(rows, columns=columns)


def breakdown_report(groups: Sequence[SubmissionGroup],
                     rules: FailureRules = DEFAULT_FAILURE_RULES) -> BreakdownTables:
    """
    Build the tasks, errors and submissions breakdown tables

    Args:
        groups: Categorized submissions
        rules: Failure matching rules

    Returns:
        BreakdownTables holding three DataFrames plus the raw counts
    """
    all_tasks = [task for group in groups for task in group.tasks]
    total_tasks = len(all_tasks)
    failed = [task for task in all_tasks if label_of(task) is not Outcome.SUCCEEDED]
    succeeded = total_tasks - len(failed)

    tasks_table = pd.DataFrame(
        [
            (succeeded, percent(succeeded, total_tasks), 'Complete successful, no errors'),
            (len(failed), percent(len(failed), total_tasks), 'Task Error Issues'),
            (total_tasks, 100.0 if total_tasks else 0.0, 'All submitted tasks'),
        ],
        columns=['number', 'percent', 'description'],
    )

    failure_counts = Counter(classify_failure(task, rules) for task in failed)
    error_rows = [
        (failure_counts.get(kind, 0), percent(failure_counts.get(kind, 0), total_tasks),
         kind.value, FAILURE_DESCRIPTIONS[kind])
        for kind in FailureKind
    ]
    error_rows.append((len(failed), percent(len(failed), total_tasks), 'Total', 'Total Task Error Issues'))
    errors_table = pd.DataFrame(error_rows, columns=['number', 'percent', 'kind', 'event'])

    category_counts = Counter(group.category for group in groups)
    category_tasks = Counter()
    for group in groups:
        category_tasks[group.category] += len(group.tasks)

    submission_rows = []
    for category in CATEGORY_REPORT_ORDER:
        submission_type, description = CATEGORY_DESCRIPTIONS[category]
        submission_rows.append((
            category_counts.get(category, 0),
            percent(category_counts.get(category, 0), len(groups)),
            category_tasks.get(category, 0),
            percent(category_tasks.get(category, 0), total_tasks),
            category.value,
            submission_type,
            description,
        ))
    submission_rows.append((
        len(groups), 100.0 if groups else 0.0, total_tasks, 100.0 if total_tasks else 0.0,
        'Total', '', 'total cluster submissions',
    ))
    submissions_table = pd.DataFrame(
        submission_rows,
        columns=['submissions', 'percent_submissions', 'tasks', 'percent_tasks',
                 'category', 'submission_type', 'description'],
    )

    return BreakdownTables(
        tasks=tasks_table,
        errors=errors_table,
        submissions=submissions_table,
        failure_counts={kind: failure_counts.get(kind, 0) for kind in FailureKind},
        category_counts={category: category_counts.get(category, 0) for category in Category},
        category_task_counts={category: category_tasks.get(category, 0) for category in Category},
    )


def tasks_per_submission(groups: Sequence[SubmissionGroup]) -> pd.DataFrame:
    """Histogram of submission sizes: (n_tasks, n_submissions) sorted by size"""
    sizes = Counter(len(group.tasks) for group in groups)
    return pd.DataFrame(sorted(sizes.items()), columns=['n_tasks', 'n_submissions'])


def render_tables(tables: BreakdownTables, usage: Optional[pd.DataFrame] = None) -> str:
    """Aligned plain-text rendering of every table"""
    sections = [
        ('SUBMITTED TASK BREAKDOWN', tables.tasks),
        ('TASK ERROR BREAKDOWN', tables.errors),
        ('CLUSTER SUBMISSIONS BREAKDOWN', tables.submissions),
    ]
    if usage is not None:
        sections.append(('TASK USAGE', usage))

    lines = []
    for title, frame in sections:
        lines.append('=' * 60)
        lines.append(title)
        lines.append('=' * 60)
        lines.append(frame.to_string(index=False))
        lines.append('')
    return '\n'.join(lines)


def write_report_csvs(out_dir: Union[str, Path], tables: BreakdownTables,
                      usage: pd.DataFrame, sizes: pd.DataFrame) -> List[Path]:
    """Write one CSV per table; returns the written paths"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames = {
        'tasks': tables.tasks,
        'errors': tables.errors,
        'submissions': tables.submissions,
        'usage': usage,
        'sizes': sizes,
    }
    written = []
    for name, frame in frames.items():
        path = out_dir / REPORT_FILES[name]
        frame.to_csv(path, index=False, lineterminator='\n')
        written.append(path)
    return written

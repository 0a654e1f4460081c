"""Categorize package: submissions, failure kinds and breakdown tables"""

from .submissions import (
    Outcome,
    Category,
    SubmissionGroup,
    CATEGORY_REPORT_ORDER,
    label_of,
    classify_submission,
    group_by_submission
)
from .failures import (
    FailureKind,
    FailureRules,
    DEFAULT_FAILURE_RULES,
    DEFAULT_RULE_PATTERNS,
    classify_failure
)
from .reports import (
    UsageStat,
    BreakdownTables,
    DEFAULT_USAGE_ATTRIBUTES,
    REPORT_FILES,
    usage_summary,
    usage_table,
    breakdown_report,
    tasks_per_submission,
    render_tables,
    write_report_csvs
)

__all__ = [
    'Outcome',
    'Category',
    'SubmissionGroup',
    'CATEGORY_REPORT_ORDER',
    'label_of',
    'classify_submission',
    'group_by_submission',
    'FailureKind',
    'FailureRules',
    'DEFAULT_FAILURE_RULES',
    'DEFAULT_RULE_PATTERNS',
    'classify_failure',
    'UsageStat',
    'BreakdownTables',
    'DEFAULT_USAGE_ATTRIBUTES',
    'REPORT_FILES',
    'usage_summary',
    'usage_table',
    'breakdown_report',
    'tasks_per_submission',
    'render_tables',
    'write_report_csvs'
]

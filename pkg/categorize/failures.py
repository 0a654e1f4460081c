"""
Failure Classifier
==================
Sorts failed tasks into the error buckets of the task error breakdown.

Rules are tried in order and the first match wins:
1. removed before ever starting (RemoveReason set, NumJobStarts 0 or absent)
2. attribute / expression evaluation error
3. user log could not be initialized
4. memory limit exceeded (hold reason only)
5. missing file or directory
6. anything else

The matching text for rules 2-5 is configurable; the bucket names are fixed.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, Optional, Pattern

from classad_ingest.history_parser import TaskRecord


class FailureKind(Enum):
    REMOVED_BEFORE_SCHEDULED = 'RemovedBeforeScheduled'
    ATTRIBUTE_EXPRESSION_ERROR = 'AttributeExpressionError'
    USER_LOG_INIT_FAILURE = 'UserLogInitFailure'
    OUT_OF_MEMORY = 'OutOfMemory'
    NO_SUCH_FILE_OR_DIRECTORY = 'NoSuchFileOrDirectory'
    OTHER = 'Other'


FAILURE_DESCRIPTIONS: Dict[FailureKind, str] = {
    FailureKind.REMOVED_BEFORE_SCHEDULED: 'User removed before scheduled to cluster',
    FailureKind.ATTRIBUTE_EXPRESSION_ERROR: 'User defined task attribute expression error',
    FailureKind.USER_LOG_INIT_FAILURE: 'Failed to initialize user log',
    FailureKind.OUT_OF_MEMORY: 'Out-of-memory event',
    FailureKind.OTHER: 'Other',
    FailureKind.NO_SUCH_FILE_OR_DIRECTORY: 'No such file or directory',
}

# Config keys are RULE_<name>
DEFAULT_RULE_PATTERNS: Dict[str, str] = {
    # System-wide PERIODIC_HOLD/REMOVE macros name an expression too; only user job attributes count
    'ATTRIBUTE_EXPRESSION_ERROR': (r'(?i)(job attribute \w+ expression'
                                   r'|error (in|evaluating) [^.]*expression|failed to evaluate)'),
    'USER_LOG_INIT_FAILURE': r'(?i)initiali[sz]e user log',
    'OUT_OF_MEMORY': r'(?i)(memory usage exceeded|exceeded request_memory|over memory limit|out of memory|oom[ -]kill)',
    'NO_SUCH_FILE_OR_DIRECTORY': r'(?i)no such file or directory',
}


@dataclass(frozen=True)
class FailureRules:
    attribute_expression: Pattern
    user_log: Pattern
    out_of_memory: Pattern
    no_such_file: Pattern

    @classmethod
    def from_patterns(cls, patterns: Optional[Mapping[str, str]] = None) -> 'FailureRules':
        """
        Compile rule patterns, falling back to the defaults for missing keys

        Raises:
            re.error: A pattern does not compile
        """
        merged = dict(DEFAULT_RULE_PATTERNS)
        merged.update(patterns or {})
        return cls(
            attribute_expression=re.compile(merged['ATTRIBUTE_EXPRESSION_ERROR']),
            user_log=re.compile(merged['USER_LOG_INIT_FAILURE']),
            out_of_memory=re.compile(merged['OUT_OF_MEMORY']),
            no_such_file=re.compile(merged['NO_SUCH_FILE_OR_DIRECTORY']),
        )

    def patterns(self) -> Dict[str, str]:
        return {
            'ATTRIBUTE_EXPRESSION_ERROR': self.attribute_expression.pattern,
            'USER_LOG_INIT_FAILURE': self.user_log.pattern,
            'OUT_OF_MEMORY': self.out_of_memory.pattern,
            'NO_SUCH_FILE_OR_DIRECTORY': self.no_such_file.pattern,
        }


DEFAULT_FAILURE_RULES = FailureRules.from_patterns()


def _matches(pattern: Pattern, *texts: Optional[str]) -> bool:
    return any(text and pattern.search(text) for text in texts)


def classify_failure(task: TaskRecord, rules: FailureRules = DEFAULT_FAILURE_RULES) -> FailureKind:
    """
    Classify why a failed (or indeterminate) task did not complete

    Args:
        task: Task whose outcome is not Succeeded
        rules: Compiled matching rules

    Returns:
        The first matching FailureKind
    """
    remove_reason = task.remove_reason
    hold_reason = task.last_hold_reason

    if remove_reason and task.num_job_starts in (0, None):
        return FailureKind.REMOVED_BEFORE_SCHEDULED
    if _matches(rules.attribute_expression, remove_reason, hold_reason):
        return FailureKind.ATTRIBUTE_EXPRESSION_ERROR
    if _matches(rules.user_log, remove_reason, hold_reason):
        return FailureKind.USER_LOG_INIT_FAILURE
    if _matches(rules.out_of_memory, hold_reason):
        return FailureKind.OUT_OF_MEMORY
    if _matches(rules.no_such_file, remove_reason, hold_reason):
        return FailureKind.NO_SUCH_FILE_OR_DIRECTORY
    return FailureKind.OTHER

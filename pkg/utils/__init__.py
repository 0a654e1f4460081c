"""Utils package shared by the taskseer pipeline"""

from .errors import TaskseerError, UsageError, ConfigError
from .helpers import (
    percent,
    canonical_json,
    stable_digest,
    epoch_millis,
    is_finite_number,
    MonotonicEpochClock,
    IntervalPacer
)

__all__ = [
    'TaskseerError',
    'UsageError',
    'ConfigError',
    'percent',
    'canonical_json',
    'stable_digest',
    'epoch_millis',
    'is_finite_number',
    'MonotonicEpochClock',
    'IntervalPacer'
]

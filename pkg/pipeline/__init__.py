"""Pipeline package: subcommand orchestration"""

from .runner import (
    METRICS_FILE,
    ROC_FILE,
    IMPORTANCE_FILE,
    CV_PREDICTIONS_FILE,
    EVALUATION_SPLITS,
    PipelineRunner
)

__all__ = [
    'METRICS_FILE',
    'ROC_FILE',
    'IMPORTANCE_FILE',
    'CV_PREDICTIONS_FILE',
    'EVALUATION_SPLITS',
    'PipelineRunner'
]

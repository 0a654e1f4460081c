"""Trace synth package: synthetic traces with a ground-truth ledger"""

from .spec import (
    DEFAULT_CATEGORY_MIX,
    DEFAULT_FAILURE_KIND_MIX,
    DEFAULT_TASKS_PER_MULTI_MEAN,
    DEFAULT_FAILURE_RATE_IN_MIXED,
    SynthSpecError,
    PlantedFeature,
    SynthSpec,
    parse_mix,
    parse_planted_features,
    load_synth_spec
)
from .generator import (
    LEDGER_FILE,
    Ledger,
    largest_remainder,
    generate_trace,
    synth_trace,
    load_ledger
)
from .planted import planted_signal_dataset

__all__ = [
    'DEFAULT_CATEGORY_MIX',
    'DEFAULT_FAILURE_KIND_MIX',
    'DEFAULT_TASKS_PER_MULTI_MEAN',
    'DEFAULT_FAILURE_RATE_IN_MIXED',
    'SynthSpecError',
    'PlantedFeature',
    'SynthSpec',
    'parse_mix',
    'parse_planted_features',
    'load_synth_spec',
    'LEDGER_FILE',
    'Ledger',
    'largest_remainder',
    'generate_trace',
    'synth_trace',
    'load_ledger',
    'planted_signal_dataset'
]

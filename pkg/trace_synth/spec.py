"""
Synthetic Trace Spec
====================
Parameters of a generated cluster trace, read from a key=value file:

    N_SUBMISSIONS=1000
    CATEGORY_MIX=0.622,0.248,0.108,0.020,0.002
    TASKS_PER_MULTI_MEAN=182.3
    FAILURE_RATE_IN_MIXED=0.143
    FAILURE_KIND_MIX=0.5644,0.3965,0.0187,0.0099,0.0036,0.0069
    PLANTED_FEATURES=PlantedScore:Numeric:1.5;PlantedFlag:Boolean:0.6
    NOISE_RATE=0.05
    N_NODES=2
    MIN_TASKS=5
    SEED=1

CATEGORY_MIX follows the submissions table order (SingleSuccess,
SingleFail, MultiMixed, MultiAllSuccess, MultiAllFail); FAILURE_KIND_MIX
follows FailureKind order.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

from dotenv import dotenv_values

from categorize.failures import FailureKind
from categorize.submissions import CATEGORY_REPORT_ORDER
from dataset.builder import FeatureKind
from utils.errors import TaskseerError

logger = logging.getLogger(__name__)

# Submission shares of the production trace, in CATEGORY_REPORT_ORDER
DEFAULT_CATEGORY_MIX = (0.622, 0.248, 0.108, 0.020, 0.002)

# Failed-task counts per FailureKind observed on the production trace
_FAILURE_KIND_COUNTS = {
    FailureKind.REMOVED_BEFORE_SCHEDULED: 13070,
    FailureKind.ATTRIBUTE_EXPRESSION_ERROR: 9183,
    FailureKind.USER_LOG_INIT_FAILURE: 434,
    FailureKind.OUT_OF_MEMORY: 229,
    FailureKind.NO_SUCH_FILE_OR_DIRECTORY: 83,
    FailureKind.OTHER: 160,
}
DEFAULT_FAILURE_KIND_MIX = tuple(
    _FAILURE_KIND_COUNTS[kind] / sum(_FAILURE_KIND_COUNTS.values()) for kind in FailureKind
)

DEFAULT_TASKS_PER_MULTI_MEAN = 182.3
DEFAULT_FAILURE_RATE_IN_MIXED = 0.143


class SynthSpecError(TaskseerError):
    """Spec file is malformed or describes an infeasible trace"""


@dataclass(frozen=True)
class PlantedFeature:
    name: str
    kind: FeatureKind
    strength: float


@dataclass(frozen=True)
class SynthSpec:
    n_submissions: int = 1000
    category_mix: Tuple[float, ...] = DEFAULT_CATEGORY_MIX
    tasks_per_multi_mean: float = DEFAULT_TASKS_PER_MULTI_MEAN
    failure_rate_in_mixed: float = DEFAULT_FAILURE_RATE_IN_MIXED
    failure_kind_mix: Tuple[float, ...] = DEFAULT_FAILURE_KIND_MIX
    planted_features: Tuple[PlantedFeature, ...] = field(default_factory=tuple)
    noise_rate: float = 0.0
    n_nodes: int = 2
    min_tasks: int = 5
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_submissions < 1:
            raise SynthSpecError(f"N_SUBMISSIONS must be positive, got {self.n_submissions}")
        _check_mix('CATEGORY_MIX', self.category_mix, len(CATEGORY_REPORT_ORDER))
        _check_mix('FAILURE_KIND_MIX', self.failure_kind_mix, len(FailureKind))
        if not self.tasks_per_multi_mean >= 2:
            raise SynthSpecError(
                f"TASKS_PER_MULTI_MEAN={self.tasks_per_multi_mean}: multi-task submissions need at least 2 tasks"
            )
        for name, rate in (('FAILURE_RATE_IN_MIXED', self.failure_rate_in_mixed), ('NOISE_RATE', self.noise_rate)):
            if not 0.0 <= rate <= 1.0:
                raise SynthSpecError(f"{name} must be within [0, 1], got {rate}")
        if self.n_nodes < 1:
            raise SynthSpecError(f"N_NODES must be positive, got {self.n_nodes}")
        if self.min_tasks < 2:
            raise SynthSpecError(f"MIN_TASKS must be at least 2, got {self.min_tasks}")
        if self.seed < 0:
            raise SynthSpecError(f"SEED must be non-negative, got {self.seed}")
        names = [feature.name for feature in self.planted_features]
        if len(set(names)) != len(names):
            raise SynthSpecError(f"duplicate planted feature names: {names}")


def _check_mix(name: str, mix: Sequence[float], size: int) -> None:
    if len(mix) != size:
        raise SynthSpecError(f"{name} needs {size} shares, got {len(mix)}")
    if any(not math.isfinite(share) or share < 0 for share in mix):
        raise SynthSpecError(f"{name} shares must be non-negative: {mix}")
    if abs(sum(mix) - 1.0) > 1e-9:
        raise SynthSpecError(f"{name} must sum to 1, got {sum(mix)!r}")


def parse_mix(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(',') if part.strip())


def parse_planted_features(text: str) -> Tuple[PlantedFeature, ...]:
    """'name:kind:strength;...' with kind Numeric, Boolean or Categorical"""
    features = []
    for item in text.split(';'):
        if not item.strip():
            continue
        parts = [part.strip() for part in item.split(':')]
        if len(parts) != 3:
            raise SynthSpecError(f"planted feature {item!r} is not name:kind:strength")
        name, kind, strength = parts
        try:
            features.append(PlantedFeature(name, FeatureKind(kind), float(strength)))
        except ValueError as e:
            raise SynthSpecError(f"planted feature {item!r}: {e}") from e
    return tuple(features)


def load_synth_spec(path: Union[str, Path], seed: Optional[int] = None) -> SynthSpec:
    """
    Read a SynthSpec from a key=value file

    Args:
        path: Spec file
        seed: Overrides SEED from the file

    Raises:
        SynthSpecError: Unreadable file, bad value or infeasible spec
    """
    path = Path(path)
    if not path.is_file():
        raise SynthSpecError(f"spec file not found: {path}")
    values = {key.upper(): value for key, value in dotenv_values(path).items() if value is not None}
    known = {'N_SUBMISSIONS', 'CATEGORY_MIX', 'TASKS_PER_MULTI_MEAN', 'FAILURE_RATE_IN_MIXED',
             'FAILURE_KIND_MIX', 'PLANTED_FEATURES', 'NOISE_RATE', 'N_NODES', 'MIN_TASKS', 'SEED'}
    unknown = sorted(set(values) - known)
    if unknown:
        logger.warning(f"Ignoring unknown spec keys: {', '.join(unknown)}")

    spec = SynthSpec()
    try:
        converters = {
            'N_SUBMISSIONS': ('n_submissions', int),
            'CATEGORY_MIX': ('category_mix', parse_mix),
            'TASKS_PER_MULTI_MEAN': ('tasks_per_multi_mean', float),
            'FAILURE_RATE_IN_MIXED': ('failure_rate_in_mixed', float),
            'FAILURE_KIND_MIX': ('failure_kind_mix', parse_mix),
            'PLANTED_FEATURES': ('planted_features', parse_planted_features),
            'NOISE_RATE': ('noise_rate', float),
            'N_NODES': ('n_nodes', int),
            'MIN_TASKS': ('min_tasks', int),
            'SEED': ('seed', int),
        }
        updates = {attr: convert(values[key]) for key, (attr, convert) in converters.items() if key in values}
    except ValueError as e:
        raise SynthSpecError(f"{path}: {e}") from e
    if seed is not None:
        updates['seed'] = seed
    spec = replace(spec, **updates)
    logger.info(f"Loaded synth spec from {path}: {spec.n_submissions} submissions, seed {spec.seed}")
    return spec

"""
Forest Configuration
====================
Hyperparameters of the random forest. Defaults: 50 trees of depth 50,
5 candidate features per split, 1000 numeric histogram bins and 1024
categorical bins.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Mapping, Optional

from utils.errors import TaskseerError


class ForestError(TaskseerError):
    """Training or prediction cannot proceed"""


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    max_depth: int = 50
    mtries: int = 5
    nbins_numeric: int = 1000
    nbins_categorical: int = 1024
    min_rows_per_leaf: int = 1
    seed: int = 0
    folds: int = 5
    sample_rate: float = 1.0
    bootstrap: bool = True

    def __post_init__(self):
        positive = ('n_trees', 'max_depth', 'mtries', 'nbins_categorical', 'min_rows_per_leaf', 'folds')
        for name in positive:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.nbins_numeric, int) or self.nbins_numeric < 2:
            raise ValueError(f"nbins_numeric must be at least 2, got {self.nbins_numeric!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not 0.0 < self.sample_rate <= 1.0:
            raise ValueError(f"sample_rate must be in (0, 1], got {self.sample_rate!r}")

    def check_features(self, n_features: int) -> None:
        if self.mtries > n_features:
            raise ForestError(
                f"mtries={self.mtries} exceeds the {n_features} active features; "
                f"lower mtries or keep more columns"
            )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], **overrides: Optional[Any]) -> 'ForestConfig':
        known = {f.name for f in fields(cls)}
        values = {key: value for key, value in data.items() if key in known}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

"""
Settings
========
Pipeline configuration read from a key=value file (same syntax as .env):

    IGNORE_COLUMNS=id,AutoClusterId,CommittedTime,CompletionDate,ExitCode,...
    MIN_TASKS=5
    SPLIT_RATIOS=0.6,0.3,0.1
    SEED=42
    FOREST_N_TREES=50
    RULE_OUT_OF_MEMORY=(?i)memory limit

Environment variables prefixed TASKSEER_ override the file; command-line
flags override both. Everything is validated before a subcommand touches
the filesystem.
"""

import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values

from categorize.failures import DEFAULT_RULE_PATTERNS, FailureRules
from categorize.reports import DEFAULT_USAGE_ATTRIBUTES
from dataset.builder import DEFAULT_IGNORE_COLUMNS, DEFAULT_MAX_CATEGORIES
from dataset.partition import DEFAULT_SPLIT_RATIOS, PartitionError, validate_ratios
from dataset.population import DEFAULT_MIN_TASKS
from evaluate.metrics import DEFAULT_THRESHOLD
from forest.config import ForestConfig
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'TASKSEER_'
RULE_PREFIX = 'RULE_'

FOREST_KEYS = {
    'FOREST_N_TREES': ('n_trees', int),
    'FOREST_MAX_DEPTH': ('max_depth', int),
    'FOREST_MTRIES': ('mtries', int),
    'FOREST_NBINS_NUMERIC': ('nbins_numeric', int),
    'FOREST_NBINS_CATEGORICAL': ('nbins_categorical', int),
    'FOREST_MIN_ROWS_PER_LEAF': ('min_rows_per_leaf', int),
    'FOREST_FOLDS': ('folds', int),
    'FOREST_SAMPLE_RATE': ('sample_rate', float),
}


def _name_list(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(',') if part.strip())


def _ratios(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(',') if part.strip())


SCALAR_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    'IGNORE_COLUMNS': ('ignore_columns', _name_list),
    'MIN_TASKS': ('min_tasks', int),
    'SPLIT_RATIOS': ('split_ratios', _ratios),
    'SEED': ('seed', int),
    'THREADS': ('threads', int),
    'THRESHOLD': ('threshold', float),
    'MAX_CATEGORIES': ('max_categories', int),
    'USAGE_ATTRIBUTES': ('usage_attributes', _name_list),
}


@dataclass(frozen=True)
class Config:
    """Effective pipeline configuration"""
    ignore_columns: Tuple[str, ...] = DEFAULT_IGNORE_COLUMNS
    min_tasks: int = DEFAULT_MIN_TASKS
    split_ratios: Tuple[float, ...] = DEFAULT_SPLIT_RATIOS
    seed: Optional[int] = None
    threads: int = 1
    threshold: float = DEFAULT_THRESHOLD
    max_categories: int = DEFAULT_MAX_CATEGORIES
    usage_attributes: Tuple[str, ...] = DEFAULT_USAGE_ATTRIBUTES
    forest: ForestConfig = field(default_factory=ForestConfig)
    rule_patterns: Tuple[Tuple[str, str], ...] = tuple(sorted(DEFAULT_RULE_PATTERNS.items()))
    source: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            ConfigError: Any value out of range
        """
        if self.min_tasks < 2:
            raise ConfigError(f"MIN_TASKS must be at least 2, got {self.min_tasks}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"SEED must be non-negative, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"THREADS must be positive, got {self.threads}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"THRESHOLD must be within [0, 1], got {self.threshold}")
        if self.max_categories < 1:
            raise ConfigError(f"MAX_CATEGORIES must be positive, got {self.max_categories}")
        try:
            validate_ratios(self.split_ratios)
        except PartitionError as e:
            raise ConfigError(f"SPLIT_RATIOS: {e}") from e
        unknown = sorted({name for name, _ in self.rule_patterns} - set(DEFAULT_RULE_PATTERNS))
        if unknown:
            raise ConfigError(f"unknown failure rules: {', '.join(RULE_PREFIX + name for name in unknown)}")
        try:
            self.failure_rules()
        except re.error as e:
            raise ConfigError(f"failure rule does not compile: {e}") from e

    def failure_rules(self) -> FailureRules:
        return FailureRules.from_patterns(dict(self.rule_patterns))

    def forest_config(self, **overrides: Any) -> ForestConfig:
        """ForestConfig seeded from SEED unless a seed override is given"""
        values = {'seed': self.seed}
        values.update(overrides)
        try:
            return ForestConfig.from_dict(self.forest.to_dict(), **values)
        except ValueError as e:
            raise ConfigError(f"forest config: {e}") from e

    def summary_lines(self) -> List[str]:
        """Effective config, one 'key = value' line each"""
        lines = [
            f"config file = {self.source or '(none)'}",
            f"ignore_columns = {','.join(self.ignore_columns)}",
            f"min_tasks = {self.min_tasks}",
            f"split_ratios = {','.join(str(r) for r in self.split_ratios)}",
            f"seed = {self.seed if self.seed is not None else '(unset)'}",
            f"threads = {self.threads}",
            f"threshold = {self.threshold}",
            f"max_categories = {self.max_categories}",
            f"usage_attributes = {','.join(self.usage_attributes)}",
        ]
        lines += [f"forest.{key} = {value}" for key, value in self.forest.to_dict().items() if key != 'seed']
        lines += [f"rule.{name} = {pattern}" for name, pattern in self.rule_patterns]
        return lines


def _collect(path: Optional[Union[str, Path]], environ: Mapping[str, str]) -> Dict[str, str]:
    values: Dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update({key.upper(): value for key, value in dotenv_values(path).items() if value is not None})
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX):
            values[key[len(ENV_PREFIX):].upper()] = value
    return values


def load_config(path: Optional[Union[str, Path]] = None,
                environ: Optional[Mapping[str, str]] = None,
                **overrides: Any) -> Config:
    """
    Build the effective Config

    Args:
        path: Optional key=value config file
        environ: Environment mapping (defaults to os.environ)
        **overrides: Config field values from command-line flags; None is ignored

    Returns:
        Validated Config

    Raises:
        ConfigError: Unreadable file, unknown key or invalid value
    """
    values = _collect(path, os.environ if environ is None else environ)

    updates: Dict[str, Any] = {}
    forest_updates: Dict[str, Any] = {}
    rules = dict(DEFAULT_RULE_PATTERNS)
    for key, text in sorted(values.items()):
        try:
            if key in SCALAR_KEYS:
                attr, convert = SCALAR_KEYS[key]
                updates[attr] = convert(text)
            elif key in FOREST_KEYS:
                attr, convert = FOREST_KEYS[key]
                forest_updates[attr] = convert(text)
            elif key.startswith(RULE_PREFIX):
                rules[key[len(RULE_PREFIX):]] = text
            else:
                raise ConfigError(f"unknown config key: {key}")
        except ValueError as e:
            raise ConfigError(f"{key}={text!r}: {e}") from e

    forest_overrides = overrides.pop('forest', None) or {}
    updates.update({key: value for key, value in overrides.items() if value is not None})
    forest_updates.update({key: value for key, value in forest_overrides.items() if value is not None})
    try:
        forest = replace(ForestConfig(), **forest_updates)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"forest config: {e}") from e

    return Config(
        forest=forest,
        rule_patterns=tuple(sorted(rules.items())),
        source=None if path is None else str(path),
        **updates,
    )

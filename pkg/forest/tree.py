"""
Decision Tree Learner
=====================
Classification trees for the two-class (Failed / Succeeded) problem:

- numeric columns: equal-width histogram over the node's non-missing
  values, cuts between adjacent occupied bins
- categorical / boolean columns: categories ordered by failure rate,
  prefix cuts of that order
- missing values: tried on both sides, the better side is kept; when the
  node has none they follow the heavier child

Rows carry weights (bootstrap multiplicities); every count below is weighted.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from dataset.builder import CLASS_FAILED
from .config import ForestConfig
from .encoding import FeatureEncoding

logger = logging.getLogger(__name__)

# Gains at or below this are treated as no improvement
MIN_GAIN = 1e-12


class Side(Enum):
    LEFT = 'Left'
    RIGHT = 'Right'


@dataclass(frozen=True)
class Split:
    """
    Routing rule of an internal node

    NumericThreshold: left iff value <= threshold.
    CategorySubset: left iff the category id is in categories.
    Missing (and unseen) values go to missing_goes.
    """
    feature: str
    threshold: Optional[float] = None
    categories: FrozenSet[int] = frozenset()
    missing_goes: Side = Side.LEFT

    def __post_init__(self):
        if (self.threshold is None) == (not self.categories):
            raise ValueError("a split needs exactly one of threshold or categories")

    @property
    def kind(self) -> str:
        return 'NumericThreshold' if self.threshold is not None else 'CategorySubset'

    def goes_left(self, values: np.ndarray) -> np.ndarray:
        missing = np.isnan(values)
        if self.threshold is not None:
            with np.errstate(invalid='ignore'):
                left = values <= self.threshold
        else:
            left = np.isin(values, sorted(self.categories))
        left[missing] = self.missing_goes is Side.LEFT
        return left


@dataclass(frozen=True)
class Leaf:
    n_failed: float
    n_succeeded: float

    @property
    def p_failed(self) -> float:
        return self.n_failed / (self.n_failed + self.n_succeeded)


@dataclass(frozen=True)
class Internal:
    split: Split
    left: 'TreeNode'
    right: 'TreeNode'
    gain: float
    weight: float


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class SplitCandidate:
    split: Split
    gain: float


@dataclass(frozen=True)
class NumericHistogram:
    """Per-bin weighted class counts plus the missing bin"""
    edges: np.ndarray
    failed: np.ndarray
    succeeded: np.ndarray
    missing_failed: float
    missing_succeeded: float
    bins: np.ndarray

    @property
    def total(self) -> float:
        return float(self.failed.sum() + self.succeeded.sum() + self.missing_failed + self.missing_succeeded)


def gini(class_counts: Tuple[float, float]) -> float:
    """Gini impurity 1 - p_a^2 - p_b^2 of two class counts"""
    a, b = class_counts
    if a < 0 or b < 0:
        raise ValueError(f"class counts must be non-negative: {class_counts}")
    total = a + b
    if total <= 0:
        raise ValueError("gini of an empty node")
    pa = a / total
    pb = b / total
    return 1.0 - pa * pa - pb * pb


def _gini_pairs(failed: np.ndarray, succeeded: np.ndarray) -> np.ndarray:
    total = failed + succeeded
    safe = np.where(total > 0, total, 1.0)
    pf = failed / safe
    ps = succeeded / safe
    return np.where(total > 0, 1.0 - pf * pf - ps * ps, 0.0)


def _split_gains(left_f, left_s, right_f, right_s, parent_gini: float, total: float,
                 min_leaf: float) -> np.ndarray:
    left_w = left_f + left_s
    right_w = right_f + right_s
    gains = parent_gini - (left_w / total) * _gini_pairs(left_f, left_s) \
        - (right_w / total) * _gini_pairs(right_f, right_s)
    feasible = (left_w >= min_leaf) & (right_w >= min_leaf)
    return np.where(feasible, gains, -np.inf)


def _weights_for(labels: np.ndarray, weights: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    weights = np.ones(len(labels)) if weights is None else np.asarray(weights, dtype=np.float64)
    is_failed = np.asarray(labels) == CLASS_FAILED
    return weights, is_failed


def histogram_numeric(values: np.ndarray, labels: np.ndarray, nbins: int,
                      weights: Optional[np.ndarray] = None) -> NumericHistogram:
    """
    Equal-width histogram of weighted class counts

    Args:
        values: Column values, NaN = missing
        labels: CLASS_FAILED / CLASS_SUCCEEDED per row
        nbins: Number of bins (>= 2)
        weights: Row weights, default 1

    Returns:
        NumericHistogram over [min, max] of the non-missing values; empty
        bins when every value is missing
    """
    if nbins < 2:
        raise ValueError(f"nbins must be at least 2, got {nbins}")
    values = np.asarray(values, dtype=np.float64)
    weights, is_failed = _weights_for(labels, weights)
    missing = np.isnan(values)
    missing_failed = float(weights[missing & is_failed].sum())
    missing_succeeded = float(weights[missing & ~is_failed].sum())
    bins = np.full(len(values), -1, dtype=np.int64)

    present = ~missing
    if not present.any():
        empty = np.zeros(0)
        return NumericHistogram(empty, empty, empty, missing_failed, missing_succeeded, bins)

    observed = values[present]
    lo, hi = observed.min(), observed.max()
    if hi > lo:
        index = np.floor((observed - lo) / (hi - lo) * nbins).astype(np.int64)
        np.clip(index, 0, nbins - 1, out=index)
    else:
        index = np.zeros(observed.size, dtype=np.int64)
    bins[present] = index

    present_weights = weights[present]
    present_failed = is_failed[present]
    return NumericHistogram(
        edges=np.linspace(lo, hi, nbins + 1),
        failed=np.bincount(index, weights=present_weights * present_failed, minlength=nbins),
        succeeded=np.bincount(index, weights=present_weights * ~present_failed, minlength=nbins),
        missing_failed=missing_failed,
        missing_succeeded=missing_succeeded,
        bins=bins,
    )


def _choose_missing_side(left_f, left_s, right_f, right_s, missing_f, missing_s,
                         parent_gini: float, total: float, min_leaf: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gain per cut and whether missing rows go left

    missing_f / missing_s are scalars or per-cut arrays; cuts without
    missing rows send them to the heavier side.
    """
    has_missing = (np.asarray(missing_f) + missing_s) > 0
    heavier_left = (left_f + left_s) >= (right_f + right_s)
    if not has_missing.any():
        return _split_gains(left_f, left_s, right_f, right_s, parent_gini, total, min_leaf), heavier_left
    gain_left = _split_gains(left_f + missing_f, left_s + missing_s, right_f, right_s,
                             parent_gini, total, min_leaf)
    gain_right = _split_gains(left_f, left_s, right_f + missing_f, right_s + missing_s,
                              parent_gini, total, min_leaf)
    prefer_left = gain_left >= gain_right
    gains = np.where(has_missing, np.where(prefer_left, gain_left, gain_right), gain_left)
    return gains, np.where(has_missing, prefer_left, heavier_left)


@dataclass(frozen=True)
class _ColumnCuts:
    """
    Weighted class counts on both sides of every cut of one column

    Numeric columns keep their sorted node values and, per cut, the last
    sorted position left of it. Categorical columns keep the category ids in
    cut order and, per cut, how many of them fall left.
    """
    name: str
    left_f: np.ndarray
    left_s: np.ndarray
    right_f: np.ndarray
    right_s: np.ndarray
    missing_f: float
    missing_s: float
    sorted_values: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None
    ordered_ids: Optional[np.ndarray] = None
    left_counts: Optional[np.ndarray] = None

    def split_at(self, cut: int, missing_goes: Side) -> Split:
        if self.ordered_ids is None:
            left_max = self.sorted_values[self.positions[cut]]
            right_min = self.sorted_values[self.positions[cut] + 1]
            threshold = float((left_max + right_min) / 2.0)
            if not left_max <= threshold < right_min:
                threshold = float(left_max)
            return Split(feature=self.name, threshold=threshold, missing_goes=missing_goes)
        subset = frozenset(self.ordered_ids[:self.left_counts[cut]].tolist())
        return Split(feature=self.name, categories=subset, missing_goes=missing_goes)


def _numeric_cuts(names: Sequence[str], values: np.ndarray, wf: np.ndarray, ws: np.ndarray,
                  nbins: int) -> List[Optional[_ColumnCuts]]:
    """
    Histogram cuts of several numeric columns at once

    values is (n_columns, n_rows). Bins are those of histogram_numeric;
    sorting a column puts its occupied bins next to each other, so the
    running class sums at bin changes are the cumulative histogram at the
    occupied bins.
    """
    n_columns, n_rows = values.shape
    order = np.argsort(values, axis=1)
    ordered = np.sort(values, axis=1)
    present = ~np.isnan(ordered)
    n_present = present.sum(axis=1)
    columns = np.arange(n_columns)
    last = np.maximum(n_present - 1, 0)

    lo = np.where(n_present > 0, ordered[:, 0], 0.0)
    width = ordered[columns, last] - lo
    filled = np.where(present, ordered, lo[:, None])
    scaled = (filled - lo[:, None]) / np.where(width > 0, width, 1.0)[:, None] * nbins
    bins = np.floor(scaled).astype(np.int64)
    np.clip(bins, 0, nbins - 1, out=bins)

    sorted_f = wf[order]
    sorted_s = ws[order]
    running_f = np.cumsum(sorted_f, axis=1)
    running_s = np.cumsum(sorted_s, axis=1)
    if (n_present == n_rows).all():
        missing_f = missing_s = np.zeros(n_columns)
    else:
        missing_f = np.where(present, 0.0, sorted_f).sum(axis=1)
        missing_s = np.where(present, 0.0, sorted_s).sum(axis=1)

    column_of, position = np.nonzero((bins[:, 1:] != bins[:, :-1]) & present[:, 1:])
    left_f = running_f[column_of, position]
    left_s = running_s[column_of, position]
    right_f = running_f[columns, last][column_of] - left_f
    right_s = running_s[columns, last][column_of] - left_s

    bounds = np.concatenate(([0], np.cumsum(np.bincount(column_of, minlength=n_columns))))
    cuts: List[Optional[_ColumnCuts]] = []
    for k, name in enumerate(names):
        start, end = bounds[k], bounds[k + 1]
        if start == end:
            cuts.append(None)
            continue
        cuts.append(_ColumnCuts(
            name=name,
            left_f=left_f[start:end],
            left_s=left_s[start:end],
            right_f=right_f[start:end],
            right_s=right_s[start:end],
            missing_f=float(missing_f[k]),
            missing_s=float(missing_s[k]),
            sorted_values=ordered[k],
            positions=position[start:end],
        ))
    return cuts


def _overflow_groups(categories: np.ndarray, failed: np.ndarray, succeeded: np.ndarray,
                     nbins_categorical: int) -> List[Tuple[float, Tuple[int, ...]]]:
    """(failure rate, ids) per group when the rarest categories share the last bin, unsorted"""
    by_weight = np.lexsort((categories, -(failed + succeeded)))
    kept = by_weight[:nbins_categorical - 1]
    overflow = by_weight[nbins_categorical - 1:]
    members = [[i] for i in kept] + [sorted(overflow, key=lambda i: categories[i])]
    groups = []
    for member in members:
        group_failed = float(failed[member].sum())
        group_total = group_failed + float(succeeded[member].sum())
        groups.append((group_failed / group_total, tuple(sorted(int(categories[i]) for i in member))))
    return groups


def order_categories(codes: np.ndarray, labels: np.ndarray, nbins_categorical: int = 1024,
                     weights: Optional[np.ndarray] = None) -> List[Tuple[int, ...]]:
    """
    Category groups sorted by failure rate, ties by category id

    Every group is a single category unless more than nbins_categorical are
    present; then the rarest ones share one overflow group.

    Raises:
        ValueError: No category present
    """
    codes = np.asarray(codes, dtype=np.float64)
    weights, is_failed = _weights_for(labels, weights)
    present = ~np.isnan(codes)
    if not present.any():
        raise ValueError("no category present")

    categories, inverse = np.unique(codes[present].astype(np.int64), return_inverse=True)
    failed = np.bincount(inverse, weights=weights[present] * is_failed[present], minlength=categories.size)
    succeeded = np.bincount(inverse, weights=weights[present] * ~is_failed[present], minlength=categories.size)

    if categories.size > nbins_categorical:
        groups = _overflow_groups(categories, failed, succeeded, nbins_categorical)
    else:
        groups = [(float(failed[i]) / (float(failed[i]) + float(succeeded[i])), (int(categories[i]),))
                  for i in range(categories.size)]
    groups.sort(key=lambda item: (item[0], item[1][0]))
    return [ids for _, ids in groups]


def _categorical_cuts(name: str, codes: np.ndarray, wf: np.ndarray, ws: np.ndarray,
                      nbins_categorical: int) -> Optional[_ColumnCuts]:
    """Prefix cuts of the failure-rate order of the categories present in the node"""
    present = ~np.isnan(codes)
    if not present.any():
        return None
    present_codes = codes[present].astype(np.int64)
    failed = np.bincount(present_codes, weights=wf[present])
    succeeded = np.bincount(present_codes, weights=ws[present], minlength=failed.size)
    categories = np.flatnonzero(failed + succeeded > 0)
    if categories.size < 2:
        return None
    failed = failed[categories]
    succeeded = succeeded[categories]

    if categories.size > nbins_categorical:
        groups = sorted(_overflow_groups(categories, failed, succeeded, nbins_categorical),
                        key=lambda item: (item[0], item[1][0]))
        if len(groups) < 2:
            return None
        ordered_ids = np.array([c for _, ids in groups for c in ids], dtype=np.int64)
        left_counts = np.cumsum([len(ids) for _, ids in groups])[:-1]
        group_of = {c: g for g, (_, ids) in enumerate(groups) for c in ids}
        index = np.array([group_of[int(c)] for c in categories])
        group_f = np.bincount(index, weights=failed, minlength=len(groups))
        group_s = np.bincount(index, weights=succeeded, minlength=len(groups))
    else:
        order = np.lexsort((categories, failed / (failed + succeeded)))
        ordered_ids = categories[order]
        left_counts = np.arange(1, categories.size)
        group_f = failed[order]
        group_s = succeeded[order]

    missing = ~present
    left_f = np.cumsum(group_f)[:-1]
    left_s = np.cumsum(group_s)[:-1]
    return _ColumnCuts(
        name=name,
        left_f=left_f,
        left_s=left_s,
        right_f=group_f.sum() - left_f,
        right_s=group_s.sum() - left_s,
        missing_f=float(wf[missing].sum()),
        missing_s=float(ws[missing].sum()),
        ordered_ids=ordered_ids,
        left_counts=left_counts,
    )


def _pick_split(column_cuts: Sequence[Optional[_ColumnCuts]], parent_gini: float, total: float,
                min_leaf: float) -> Optional[SplitCandidate]:
    """
    Best cut over columns given in name order

    A later column wins only with a gain above the current best plus
    MIN_GAIN; within a column the lowest best cut wins.
    """
    found = [cuts for cuts in column_cuts if cuts is not None]
    if not found:
        return None
    sizes = [cuts.left_f.size for cuts in found]
    missing_f = np.repeat([cuts.missing_f for cuts in found], sizes)
    missing_s = np.repeat([cuts.missing_s for cuts in found], sizes)
    gains, missing_left = _choose_missing_side(
        np.concatenate([cuts.left_f for cuts in found]),
        np.concatenate([cuts.left_s for cuts in found]),
        np.concatenate([cuts.right_f for cuts in found]),
        np.concatenate([cuts.right_s for cuts in found]),
        missing_f, missing_s, parent_gini, total, min_leaf)

    best: Optional[SplitCandidate] = None
    start = 0
    for cuts, size in zip(found, sizes):
        cut = int(np.argmax(gains[start:start + size]))
        gain = float(gains[start + cut])
        if gain > MIN_GAIN and (best is None or gain > best.gain + MIN_GAIN):
            side = Side.LEFT if missing_left[start + cut] else Side.RIGHT
            best = SplitCandidate(cuts.split_at(cut, side), gain)
        start += size
    return best


def _search_split(columns: np.ndarray, rows: np.ndarray, wf: np.ndarray, ws: np.ndarray,
                  candidates: Sequence[int], encodings: Sequence[FeatureEncoding],
                  config: ForestConfig) -> Optional[SplitCandidate]:
    """
    Best split of the node holding rows

    columns is the (n_features, n_all_rows) encoded matrix; wf / ws are the
    failed / succeeded weights of the node rows, in rows order.
    """
    n_failed = float(wf.sum())
    n_succeeded = float(ws.sum())
    total = n_failed + n_succeeded
    if n_failed == 0 or n_succeeded == 0 or total < 2 * config.min_rows_per_leaf:
        return None

    ordered = sorted(dict.fromkeys(int(j) for j in candidates), key=lambda index: encodings[index].name)
    numeric = [j for j in ordered if encodings[j].is_numeric]
    cuts = {}
    if numeric:
        values = columns[np.asarray(numeric)[:, None], rows]
        names = [encodings[j].name for j in numeric]
        cuts.update(zip(numeric, _numeric_cuts(names, values, wf, ws, config.nbins_numeric)))
    for j in ordered:
        if j not in cuts:
            cuts[j] = _categorical_cuts(encodings[j].name, columns[j, rows], wf, ws, config.nbins_categorical)
    return _pick_split([cuts[j] for j in ordered], gini((n_failed, n_succeeded)), total,
                       config.min_rows_per_leaf)


def _class_weights(labels: np.ndarray, weights: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    weights, is_failed = _weights_for(labels, weights)
    return np.where(is_failed, weights, 0.0), np.where(is_failed, 0.0, weights)


def best_split(X: np.ndarray, labels: np.ndarray, weights: Optional[np.ndarray],
               candidates: Sequence[int], encodings: Sequence[FeatureEncoding],
               config: ForestConfig) -> Optional[SplitCandidate]:
    """
    Best split of a node over the candidate columns

    Args:
        X: Encoded rows of the node
        labels: Labels of the node rows
        weights: Row weights, default 1; zero-weight rows are ignored
        candidates: Column indices to consider
        encodings: Encoding of every column of X
        config: Bin counts and min_rows_per_leaf

    Returns:
        SplitCandidate with the largest weighted Gini gain (ties: feature
        name, then the lower cut), or None when no split gains
    """
    wf, ws = _class_weights(labels, weights)
    rows = np.flatnonzero(wf + ws > 0)
    columns = np.asarray(X, dtype=np.float64).T
    return _search_split(columns, rows, wf[rows], ws[rows], candidates, encodings, config)


def draw_sample_weights(n: int, config: ForestConfig, rng: np.random.Generator) -> np.ndarray:
    """Bootstrap multiplicities (or a without-replacement sample) of round(sample_rate * n) rows"""
    size = max(1, int(np.floor(config.sample_rate * n + 0.5)))
    if config.bootstrap:
        return np.bincount(rng.integers(0, n, size), minlength=n).astype(np.float64)
    if size >= n:
        return np.ones(n)
    weights = np.zeros(n)
    weights[rng.choice(n, size=size, replace=False)] = 1.0
    return weights


class _TreeGrower:
    """Grows a tree over row indices into one column-major copy of the sample"""

    def __init__(self, X: np.ndarray, labels: np.ndarray, weights: np.ndarray,
                 encodings: Sequence[FeatureEncoding], config: ForestConfig, rng: np.random.Generator):
        self.columns = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T)
        self.wf, self.ws = _class_weights(labels, weights)
        self.encodings = tuple(encodings)
        self.column = {encoding.name: j for j, encoding in enumerate(self.encodings)}
        self.config = config
        self.rng = rng
        self.n_candidates = min(config.mtries, len(self.encodings))

    def grow(self, rows: np.ndarray, depth: int) -> TreeNode:
        wf = self.wf[rows]
        ws = self.ws[rows]
        n_failed = float(wf.sum())
        n_succeeded = float(ws.sum())
        leaf = Leaf(n_failed, n_succeeded)
        if (depth >= self.config.max_depth or n_failed == 0 or n_succeeded == 0
                or n_failed + n_succeeded < 2 * self.config.min_rows_per_leaf):
            return leaf

        candidates = self.rng.choice(len(self.encodings), size=self.n_candidates, replace=False)
        found = _search_split(self.columns, rows, wf, ws, candidates, self.encodings, self.config)
        if found is None:
            return leaf

        left = found.split.goes_left(self.columns[self.column[found.split.feature], rows])
        return Internal(
            split=found.split,
            left=self.grow(rows[left], depth + 1),
            right=self.grow(rows[~left], depth + 1),
            gain=found.gain,
            weight=n_failed + n_succeeded,
        )


def build_tree(X: np.ndarray, labels: np.ndarray, encodings: Sequence[FeatureEncoding],
               config: ForestConfig, rng: np.random.Generator,
               weights: Optional[np.ndarray] = None) -> TreeNode:
    """
    Grow one tree

    Args:
        X: Encoded training rows
        labels: CLASS_FAILED / CLASS_SUCCEEDED per row
        encodings: Column encodings of X
        config: Forest hyperparameters
        rng: Per-tree generator (bootstrap and feature sampling)
        weights: Explicit row weights; drawn from rng when omitted

    Returns:
        Root node
    """
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise ValueError("cannot grow a tree from zero rows")
    if weights is None:
        weights = draw_sample_weights(len(labels), config, rng)
    weights = np.asarray(weights, dtype=np.float64)
    rows = np.flatnonzero(weights > 0)
    grower = _TreeGrower(X[rows], labels[rows], weights[rows], encodings, config, rng)
    return grower.grow(np.arange(rows.size), depth=0)


def predict_tree(node: TreeNode, X: np.ndarray, column: dict) -> np.ndarray:
    """Leaf failure frequency for every row of X"""
    out = np.empty(len(X), dtype=np.float64)
    stack = [(node, np.arange(len(X)))]
    while stack:
        current, rows = stack.pop()
        if rows.size == 0:
            continue
        if isinstance(current, Leaf):
            out[rows] = current.p_failed
            continue
        left = current.split.goes_left(X[rows, column[current.split.feature]])
        stack.append((current.left, rows[left]))
        stack.append((current.right, rows[~left]))
    return out


def iter_internal(node: TreeNode) -> Iterator[Internal]:
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Internal):
            yield current
            stack.append(current.right)
            stack.append(current.left)


def iter_leaves(node: TreeNode) -> Iterator[Leaf]:
    stack = [node]
    while stack:
        current = stack.pop()
        if isinstance(current, Leaf):
            yield current
        else:
            stack.append(current.right)
            stack.append(current.left)


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))

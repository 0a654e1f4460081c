import itertools
import time

import numpy as np
import pytest

from dataset import CLASS_FAILED, CLASS_SUCCEEDED, FeatureKind, dataset_from_columns
from forest import (
    FeatureEncoding,
    ForestConfig,
    ForestError,
    Internal,
    Leaf,
    ModelFormatError,
    SchemaMismatchError,
    best_split,
    build_tree,
    cross_validate,
    dumps_model,
    gini,
    hard_labels,
    histogram_numeric,
    iter_leaves,
    load_model,
    loads_model,
    order_categories,
    predict,
    predict_dataset,
    save_model,
    train,
    tree_depth,
    variable_importance
)
from trace_synth import planted_signal_dataset

F = CLASS_FAILED
S = CLASS_SUCCEEDED
NUMERIC = FeatureEncoding('x', FeatureKind.NUMERIC)


def _small_dataset(n=40, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.where(np.arange(n) % 2 == 0, F, S)
    signal = np.where(labels == F, 1.0, -1.0) + rng.normal(0, 0.2, n)
    return dataset_from_columns({
        'host': (FeatureKind.CATEGORICAL, [f"wn{i % 3}" for i in range(n)]),
        'signal': (FeatureKind.NUMERIC, signal.tolist()),
        'noise': (FeatureKind.NUMERIC, rng.normal(0, 1, n).tolist()),
    }, labels)


@pytest.mark.parametrize('counts, expected', [
    ((10, 0), 0.0),
    ((5, 5), 0.5),
    ((3, 1), 0.375),
])
def test_gini(counts, expected):
    assert gini(counts) == pytest.approx(expected)


def test_gini_of_empty_node_raises():
    with pytest.raises(ValueError):
        gini((0, 0))


def test_histogram_one_value_per_bin():
    hist = histogram_numeric(np.arange(10.0), np.zeros(10), nbins=10)
    assert (hist.failed + hist.succeeded).tolist() == [1.0] * 10


def test_histogram_constant_column_uses_one_bin():
    hist = histogram_numeric(np.full(6, 3.0), np.array([F, S] * 3), nbins=8)
    assert np.count_nonzero(hist.failed + hist.succeeded) == 1
    assert hist.total == 6


def test_histogram_counts_every_row():
    values = np.random.default_rng(5).normal(size=500)
    values[:7] = np.nan
    hist = histogram_numeric(values, np.zeros(500), nbins=1000)
    assert hist.failed.sum() + hist.succeeded.sum() == 493
    assert hist.missing_failed + hist.missing_succeeded == 7
    assert hist.total == 500


def test_order_categories_by_failure_rate():
    # rates: category 0 -> 0.2, category 1 -> 0.9, category 2 -> 0.5
    codes = np.array([0] * 10 + [1] * 10 + [2] * 10, dtype=float)
    labels = np.array([F] * 2 + [S] * 8 + [F] * 9 + [S] * 1 + [F] * 5 + [S] * 5)
    assert order_categories(codes, labels) == [(0,), (2,), (1,)]


def test_order_categories_overflow_group():
    codes = np.array([0, 0, 0, 1, 1, 2, 3], dtype=float)
    labels = np.array([F, F, F, S, S, F, S])
    groups = order_categories(codes, labels, nbins_categorical=3)
    assert len(groups) == 3
    assert (2, 3) in groups


def test_best_split_separates_pure_halves():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    labels = np.array([S, S, F, F])
    found = best_split(X, labels, None, [0], [NUMERIC], ForestConfig())
    assert found.gain == pytest.approx(0.5)
    assert 2.0 <= found.split.threshold < 3.0
    assert found.split.goes_left(X[:, 0]).tolist() == [True, True, False, False]


def test_best_split_of_pure_node_is_none():
    X = np.array([[1.0], [2.0], [3.0]])
    assert best_split(X, np.array([F, F, F]), None, [0], [NUMERIC], ForestConfig()) is None


def test_best_split_routes_missing_to_better_side():
    X = np.array([[1.0], [2.0], [np.nan], [3.0], [4.0]])
    labels = np.array([F, F, F, S, S])
    found = best_split(X, labels, None, [0], [NUMERIC], ForestConfig())
    assert found.split.goes_left(X[:, 0]).tolist() == [True, True, True, False, False]
    assert found.gain == pytest.approx(gini((3, 2)))


def _partition_gain(left, labels):
    def impurity(mask):
        n = mask.sum()
        if n == 0:
            return 0.0
        failed = np.count_nonzero(labels[mask] == F)
        return gini((failed, n - failed))

    n = len(labels)
    parent = gini((np.count_nonzero(labels == F), np.count_nonzero(labels == S)))
    return parent - left.sum() / n * impurity(left) - (~left).sum() / n * impurity(~left)


def _exhaustive_best_gain(X, labels, kinds):
    best = 0.0
    for j, kind in enumerate(kinds):
        column = X[:, j]
        distinct = np.unique(column)
        if kind is FeatureKind.NUMERIC:
            partitions = [column <= value for value in distinct[:-1]]
        else:
            partitions = [np.isin(column, subset)
                          for size in range(1, len(distinct))
                          for subset in itertools.combinations(distinct, size)]
        for left in partitions:
            best = max(best, _partition_gain(left, labels))
    return best


def test_best_split_matches_exhaustive_search():
    rng = np.random.default_rng(2024)
    config = ForestConfig(nbins_numeric=1000, min_rows_per_leaf=1)
    for case in range(200):
        n = int(rng.integers(2, 33))
        kinds = [FeatureKind.NUMERIC if rng.random() < 0.6 else FeatureKind.CATEGORICAL
                 for _ in range(int(rng.integers(1, 4)))]
        X = np.column_stack([
            rng.integers(0, 12, n) if kind is FeatureKind.NUMERIC else rng.integers(0, 4, n)
            for kind in kinds
        ]).astype(np.float64)
        labels = rng.integers(0, 2, n).astype(np.int8)
        encodings = [FeatureEncoding(f"f{j}", kind, ('a', 'b', 'c', 'd') if kind is FeatureKind.CATEGORICAL else ())
                     for j, kind in enumerate(kinds)]

        expected = _exhaustive_best_gain(X, labels, kinds)
        found = best_split(X, labels, None, range(len(kinds)), encodings, config)
        if expected <= 1e-12:
            assert found is None, f"case {case}"
            continue
        assert found is not None, f"case {case}"
        assert found.gain == pytest.approx(expected, abs=1e-9), f"case {case}"
        column = X[:, [e.name for e in encodings].index(found.split.feature)]
        assert _partition_gain(found.split.goes_left(column), labels) == pytest.approx(found.gain, abs=1e-9)


def test_single_stump_equals_exhaustive_optimum():
    ds = _small_dataset(24, seed=9)
    config = ForestConfig(n_trees=1, max_depth=1, mtries=3, bootstrap=False)
    forest = train(ds, config)
    root = forest.trees[0]
    assert isinstance(root, Internal)
    assert root.split.feature == 'signal'
    assert root.gain == pytest.approx(0.5)


def test_build_tree_of_one_row_is_a_leaf():
    tree = build_tree(np.array([[1.0]]), np.array([F]), [NUMERIC], ForestConfig(mtries=1),
                      np.random.default_rng(0), weights=np.ones(1))
    assert tree == Leaf(1.0, 0.0)


def test_build_tree_zero_rows_raises():
    with pytest.raises(ValueError):
        build_tree(np.empty((0, 1)), np.array([]), [NUMERIC], ForestConfig(mtries=1), np.random.default_rng(0))


def test_training_is_deterministic_for_a_seed():
    ds = _small_dataset()
    config = ForestConfig(n_trees=5, mtries=2, seed=7)
    assert dumps_model(train(ds, config)) == dumps_model(train(ds, config))


def test_thread_count_does_not_change_the_model(tmp_path):
    ds = _small_dataset(60, seed=3)
    config = ForestConfig(n_trees=8, mtries=2, seed=11)
    one = save_model(train(ds, config, threads=1), tmp_path / 'one.model')
    eight = save_model(train(ds, config, threads=8), tmp_path / 'eight.model')
    assert one.read_bytes() == eight.read_bytes()


def test_train_rejects_degenerate_input():
    ds = _small_dataset()
    with pytest.raises(ForestError):
        train(ds, ForestConfig(mtries=4))
    single = dataset_from_columns({'x': (FeatureKind.NUMERIC, [1.0, 2.0])}, [F, F])
    with pytest.raises(ForestError):
        train(single, ForestConfig(mtries=1))


def test_predictions_are_probabilities():
    ds = _small_dataset()
    forest = train(ds, ForestConfig(n_trees=10, mtries=2, seed=1))
    p_failed = predict_dataset(forest, ds)
    assert ((p_failed >= 0) & (p_failed <= 1)).all()
    p_f, p_s = predict(forest, {'signal': 1.2, 'host': 'wn1'})
    assert p_f + p_s == pytest.approx(1.0)
    assert p_f > 0.5


def test_predict_handles_missing_and_unseen_values():
    forest = train(_small_dataset(), ForestConfig(n_trees=5, mtries=2, seed=1))
    p_f, _ = predict(forest, {'host': 'never-seen'})
    assert 0.0 <= p_f <= 1.0
    with pytest.raises(SchemaMismatchError):
        predict(forest, {'unknown_attribute': 1})
    with pytest.raises(SchemaMismatchError):
        predict(forest, {'signal': 'high'})


def test_hard_label_ties_go_to_failed():
    assert hard_labels(np.array([0.5, 0.49, 0.51])).tolist() == [F, S, F]


def test_predict_rejects_other_schema():
    forest = train(_small_dataset(), ForestConfig(n_trees=2, mtries=2))
    other = dataset_from_columns({'signal': (FeatureKind.CATEGORICAL, ['a', 'b'])}, [F, S])
    with pytest.raises(SchemaMismatchError):
        predict_dataset(forest, other)


def test_cross_validation_covers_every_row_once():
    ds = dataset_from_columns({'x': (FeatureKind.NUMERIC, [float(i) for i in range(10)])},
                              [F if i % 2 else S for i in range(10)])
    report = cross_validate(ds, ForestConfig(n_trees=3, mtries=1, folds=5, seed=2))
    assert [r.n_holdout for r in report.folds] == [2] * 5
    assert sorted(report.fold.tolist()) == sorted([0, 1, 2, 3, 4] * 2)
    assert report.confusion.n == 10
    assert report.p_failed.shape == (10,)
    payload = report.to_dict()
    assert payload['n'] == 10
    assert len(payload['folds']) == 5


def test_importance_of_unsplit_forest_is_empty():
    ds = dataset_from_columns({'x': (FeatureKind.NUMERIC, [1.0] * 6)}, [F, S] * 3)
    forest = train(ds, ForestConfig(n_trees=3, mtries=1))
    assert variable_importance(forest) == []


def test_importance_is_normalized_and_ranked():
    forest = train(_small_dataset(80), ForestConfig(n_trees=10, mtries=2, seed=4))
    ranked = variable_importance(forest)
    assert sum(v.percentage for v in ranked) == pytest.approx(1.0)
    assert ranked[0].scaled == pytest.approx(1.0)
    assert [v.relative for v in ranked] == sorted((v.relative for v in ranked), reverse=True)
    assert ranked[0].feature == 'signal'


def test_model_file_round_trip(tmp_path):
    ds = _small_dataset()
    forest = train(ds, ForestConfig(n_trees=4, mtries=3, seed=5))
    path = save_model(forest, tmp_path / 'forest.model')
    loaded = load_model(path, expected_fingerprint=ds.fingerprint())
    assert dumps_model(loaded) == path.read_text(encoding='utf-8')
    assert predict_dataset(loaded, ds).tolist() == predict_dataset(forest, ds).tolist()


def test_corrupted_model_file_is_rejected(tmp_path):
    path = save_model(train(_small_dataset(), ForestConfig(n_trees=2, mtries=2)), tmp_path / 'f.model')
    text = path.read_text(encoding='utf-8')
    with pytest.raises(ModelFormatError):
        loads_model(text.replace('\nL ', '\nL 9', 1))
    with pytest.raises(ModelFormatError):
        loads_model(text[:len(text) // 2])
    with pytest.raises(ModelFormatError):
        loads_model(text.replace('v1', 'v2', 1))
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / 'missing.model')


def test_model_with_other_fingerprint_is_rejected(tmp_path):
    path = save_model(train(_small_dataset(), ForestConfig(n_trees=2, mtries=2)), tmp_path / 'f.model')
    with pytest.raises(SchemaMismatchError):
        load_model(path, expected_fingerprint='0' * 64)


def test_separable_planted_signal_is_learned():
    ds, true_labels = planted_signal_dataset(600, 9, noise_rate=0.0, seed=3)
    train_rows = np.arange(400)
    test_rows = np.arange(400, 600)
    forest = train(ds.take(train_rows), ForestConfig(n_trees=10, mtries=5, seed=3))
    predicted = hard_labels(predict_dataset(forest, ds.take(test_rows)))
    assert np.mean(predicted == true_labels[test_rows]) >= 0.98
    ranked = variable_importance(forest)
    assert ranked[0].feature == 'signal'
    assert ranked[0].percentage > 0.5


def test_numeric_cuts_follow_histogram_bins():
    rng = np.random.default_rng(31)
    values = rng.normal(size=400)
    values[::37] = np.nan
    labels = np.where(rng.random(400) < 1 / (1 + np.exp(-3 * np.nan_to_num(values))), F, S)
    config = ForestConfig(nbins_numeric=16)
    found = best_split(values[:, None], labels, None, [0], [NUMERIC], config)

    hist = histogram_numeric(values, labels, nbins=16)
    present = hist.bins >= 0
    left = found.split.goes_left(values)
    for b in np.unique(hist.bins[present]):
        assert len(set(left[hist.bins == b].tolist())) == 1
    assert _partition_gain(left, labels) == pytest.approx(found.gain, abs=1e-9)


def test_larger_deeper_forest_fits_training_rows_at_least_as_well():
    ds, _ = planted_signal_dataset(600, 9, noise_rate=0.05, seed=5)

    def training_error(config):
        return np.mean(hard_labels(predict_dataset(train(ds, config), ds)) != ds.labels)

    stump = training_error(ForestConfig(n_trees=1, max_depth=1, mtries=5, seed=5))
    full = training_error(ForestConfig(n_trees=50, max_depth=50, mtries=5, seed=5))
    assert full <= stump


@pytest.mark.parametrize('min_rows, max_depth', [(1, 50), (3, 6), (10, 3)])
def test_leaves_respect_min_rows_and_depth(min_rows, max_depth):
    ds, _ = planted_signal_dataset(500, 5, noise_rate=0.1, seed=8)
    config = ForestConfig(n_trees=5, max_depth=max_depth, mtries=3, min_rows_per_leaf=min_rows, seed=8)
    for tree in train(ds, config).trees:
        assert tree_depth(tree) <= max_depth
        for leaf in iter_leaves(tree):
            assert leaf.n_failed + leaf.n_succeeded >= min_rows


@pytest.mark.slow
def test_noisy_planted_signal_cross_validation():
    noise = 0.05
    ds, _ = planted_signal_dataset(10_000, 9, noise_rate=noise, seed=1)
    started = time.perf_counter()
    report = cross_validate(ds, ForestConfig(seed=1), threads=1)
    elapsed = time.perf_counter() - started
    assert report.metrics.total_error <= noise + 0.03
    assert elapsed < 60


@pytest.mark.slow
def test_planted_signal_ranks_first_across_seeds():
    first = 0
    for seed in range(20):
        ds, _ = planted_signal_dataset(10_000, 9, noise_rate=0.05, seed=seed)
        ranked = variable_importance(train(ds, ForestConfig(seed=seed)))
        first += ranked[0].feature == 'signal'
    assert first >= 19

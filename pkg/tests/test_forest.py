import math
import time

import numpy as np
import pytest

from src.errors import ConfigError, DataFormatError, TrainingError
from src.forest import (FeatureMode, FlatTree, ForestHyperparams, ForestModel, Internal,
                        Leaf, best_split, derive_seed, fit_forest, gini, grow_tree,
                        predict, predict_score, presort, vote_counts)
from src.synthgen import SynthConfig, generate


def test_gini_examples():
    assert gini((2, 2)) == 0.5
    assert gini((5, 0)) == 0.0
    assert gini((3, 1)) == pytest.approx(0.375)


def test_gini_rejects_empty_node():
    with pytest.raises(ValueError):
        gini((0, 0))


def test_gini_bounds(rng):
    for c0, c1 in rng.integers(0, 50, size=(200, 2)):
        if c0 + c1 == 0:
            continue
        value = gini((c0, c1))
        assert 0.0 <= value <= 0.5
        assert (value == 0.0) == (c0 == 0 or c1 == 0)


@pytest.mark.parametrize("mode,d,expected", [
    (FeatureMode.SQRT, 82, 9),
    (FeatureMode.LOG2, 82, 6),
    (FeatureMode.ALL, 82, 82),
    (FeatureMode.SQRT, 1, 1),
    (FeatureMode.LOG2, 1, 1),
])
def test_feature_mode_candidate_counts(mode, d, expected):
    assert mode.n_candidates(d) == expected


def test_feature_mode_parse():
    assert FeatureMode.parse("none") is FeatureMode.ALL
    assert FeatureMode.parse(" SQRT ") is FeatureMode.SQRT
    with pytest.raises(ConfigError):
        FeatureMode.parse("half")


@pytest.mark.parametrize("field,value", [("n_estimators", 0), ("max_depth", 0),
                                         ("min_samples_split", 1)])
def test_hyperparams_validation(field, value):
    kwargs = {"n_estimators": 10, "max_depth": 5, field: value}
    with pytest.raises(ConfigError):
        ForestHyperparams(**kwargs)


def test_hyperparams_dict_round_trip():
    hp = ForestHyperparams(50, 15, FeatureMode.LOG2, seed=3)
    assert ForestHyperparams.from_dict(hp.to_dict()) == hp


def test_best_split_simple_example():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0, 0, 1, 1])
    split = best_split(X, y, np.arange(4), [0])
    assert split.feature_index == 0
    assert split.threshold == 2.5
    assert split.weighted_gini == 0.0


def test_best_split_pure_node_and_constant_feature():
    X = np.array([[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]])
    assert best_split(X, np.array([1, 1, 1]), np.arange(3), [0, 1]) is None
    assert best_split(X, np.array([0, 1, 0]), np.arange(3), [1]) is None


def test_best_split_needs_candidates():
    with pytest.raises(ValueError):
        best_split(np.ones((3, 1)), np.array([0, 1, 0]), np.arange(3), [])


def test_best_split_ties_prefer_lowest_feature():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([0, 0, 1, 1])
    assert best_split(X, y, np.arange(4), [1, 0]).feature_index == 0


def _brute_force_stump(X, y):
    n = y.shape[0]
    best = None
    for feature in range(X.shape[1]):
        values = np.unique(X[:, feature])
        for low, high in zip(values[:-1], values[1:]):
            threshold = (float(low) + float(high)) / 2.0
            left = X[:, feature] <= threshold
            n_left = int(left.sum())
            n_right = n - n_left
            ones_left = int(y[left].sum())
            ones_right = int(y[~left].sum())
            weighted = (n_left * gini((n_left - ones_left, ones_left))
                        + n_right * gini((n_right - ones_right, ones_right))) / n
            if best is None or weighted < best[2]:
                best = (feature, threshold, weighted)
    return best


def test_stump_matches_brute_force_enumeration():
    rng = np.random.default_rng(1234)
    hp = ForestHyperparams(n_estimators=1, max_depth=1, feature_mode=FeatureMode.ALL)
    for _ in range(50):
        # valores inteiros geram empates entre linhas e entre limiares
        X = rng.integers(0, 25, size=(200, 10)).astype(float)
        y = rng.integers(0, 2, size=200)
        root = grow_tree(X, y, np.arange(200), hp, np.random.default_rng(0))
        feature, threshold, _ = _brute_force_stump(X, y)
        assert isinstance(root, Internal)
        assert (root.feature_index, root.threshold) == (feature, threshold)
        assert isinstance(root.left, Leaf) and isinstance(root.right, Leaf)


def test_grow_tree_stump_on_small_example():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0, 0, 1, 1])
    root = grow_tree(X, y, np.arange(4), ForestHyperparams(1, 1), np.random.default_rng(0))
    assert root == Internal(0, 2.5, Leaf((2, 0)), Leaf((0, 2)))


def test_grow_tree_identical_rows_give_mixed_leaf():
    X = np.ones((4, 3))
    y = np.array([0, 1, 1, 0])
    root = grow_tree(X, y, np.arange(4), ForestHyperparams(1, 5), np.random.default_rng(0))
    assert root == Leaf((2, 2))
    assert root.prediction == 0


def test_deep_tree_fits_consistent_data(small_dataset):
    hp = ForestHyperparams(1, 50)
    root = grow_tree(small_dataset.X, small_dataset.y, np.arange(small_dataset.n_rows),
                     hp, np.random.default_rng(0))
    tree = FlatTree.from_node(root)
    np.testing.assert_array_equal(tree.predict(small_dataset.X), small_dataset.y)


def _walk(node, row):
    while isinstance(node, Internal):
        node = node.left if row[node.feature_index] <= node.threshold else node.right
    return node.prediction


def test_flat_tree_matches_recursive_walk(small_dataset, rng):
    hp = ForestHyperparams(1, 4, FeatureMode.SQRT)
    root = grow_tree(small_dataset.X, small_dataset.y, np.arange(small_dataset.n_rows),
                     hp, np.random.default_rng(3))
    tree = FlatTree.from_node(root)
    X = rng.normal(size=(300, small_dataset.n_features)) * 3
    expected = [_walk(root, row) for row in X]
    np.testing.assert_array_equal(tree.predict(X), expected)
    assert tree.to_node() == root


def test_fit_forest_respects_hyperparams(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(20, 10))
    assert len(model.trees) == 20
    assert max(tree.depth() for tree in model.trees) <= 10
    assert model.n_features_trained == small_dataset.n_features


def test_fit_forest_is_deterministic_and_thread_count_independent(small_dataset):
    hp = ForestHyperparams(6, 5, FeatureMode.SQRT, seed=99)
    sequential = fit_forest(small_dataset.X, small_dataset.y, hp, n_jobs=1)
    again = fit_forest(small_dataset.X, small_dataset.y, hp, n_jobs=1)
    parallel = fit_forest(small_dataset.X, small_dataset.y, hp, n_jobs=2)
    assert sequential.trees == again.trees
    assert sequential.trees == parallel.trees


def test_fit_forest_rejects_single_class():
    with pytest.raises(TrainingError):
        fit_forest(np.ones((5, 2)), np.zeros(5, dtype=int), ForestHyperparams(2, 2))


def _constant_forest(votes_for_attack: int, n_trees: int) -> ForestModel:
    trees = ([FlatTree.from_node(Leaf((0, 1)))] * votes_for_attack
             + [FlatTree.from_node(Leaf((1, 0)))] * (n_trees - votes_for_attack))
    return ForestModel(trees, ForestHyperparams(n_trees, 1), n_features_trained=2)


def test_majority_vote_and_tie_rule():
    X = np.zeros((3, 2))
    np.testing.assert_array_equal(predict(_constant_forest(11, 20), X), [1, 1, 1])
    np.testing.assert_array_equal(predict(_constant_forest(10, 20), X), [0, 0, 0])
    np.testing.assert_allclose(predict_score(_constant_forest(11, 20), X), 0.55)
    np.testing.assert_array_equal(predict_score(_constant_forest(0, 20), X), 0.0)


def test_single_tree_forest_equals_tree(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(1, 3))
    np.testing.assert_array_equal(predict(model, small_dataset.X),
                                  model.trees[0].predict(small_dataset.X))


def test_score_and_label_are_consistent(small_dataset, rng):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(8, 4, FeatureMode.LOG2))
    X = rng.normal(size=(2000, small_dataset.n_features)) * 4
    labels = predict(model, X)
    scores = predict_score(model, X)
    np.testing.assert_array_equal(labels, (scores > 0.5).astype(int))
    assert ((scores >= 0) & (scores <= 1)).all()


def test_parallel_prediction_matches_sequential(small_dataset, rng, monkeypatch):
    import src.forest as forest_module
    monkeypatch.setattr(forest_module, "PREDICT_BLOCK_ROWS", 128)
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(5, 4))
    X = rng.normal(size=(1000, small_dataset.n_features))
    np.testing.assert_array_equal(vote_counts(model, X, n_jobs=1), vote_counts(model, X, n_jobs=3))


def test_prediction_dimension_mismatch_names_both_counts(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(2, 2))
    with pytest.raises(DataFormatError, match=r"4.*6"):
        predict(model, np.zeros((3, 4)))


def test_derive_seed_streams_are_distinct():
    seeds = {derive_seed(42, k) for k in range(100)}
    assert len(seeds) == 100
    assert derive_seed(42, 0) == derive_seed(42, 0)


def test_forest_model_checks_tree_count():
    with pytest.raises(TrainingError):
        ForestModel([FlatTree.from_node(Leaf((1, 0)))], ForestHyperparams(2, 1), 1)


def test_log2_mode_uses_floor():
    assert FeatureMode.LOG2.n_candidates(82) == math.floor(math.log2(82))


def test_repeated_rows_count_with_multiplicity(rng):
    X = rng.integers(0, 12, size=(150, 5)).astype(float)
    y = rng.integers(0, 2, size=150)
    rows = rng.integers(0, 150, size=150)
    hp = ForestHyperparams(1, 6, FeatureMode.SQRT)
    by_weight = grow_tree(X, y, rows, hp, np.random.default_rng(5))
    by_copy = grow_tree(X[rows], y[rows], np.arange(150), hp, np.random.default_rng(5))
    assert by_weight == by_copy


def test_best_split_with_repeated_rows_matches_brute_force(rng):
    X = rng.integers(0, 10, size=(120, 4)).astype(float)
    y = rng.integers(0, 2, size=120)
    rows = rng.integers(0, 120, size=120)
    split = best_split(X, y, rows, range(4))
    feature, threshold, weighted = _brute_force_stump(X[rows], y[rows])
    assert (split.feature_index, split.threshold) == (feature, threshold)
    assert split.weighted_gini == pytest.approx(weighted)


def test_presort_is_stable_per_feature():
    X = np.array([[3.0, 1.0], [1.0, 1.0], [2.0, 0.0], [1.0, 5.0]])
    np.testing.assert_array_equal(presort(X), [[1, 3, 2, 0], [2, 0, 1, 3]])


def test_reusing_presort_gives_same_tree(small_dataset):
    hp = ForestHyperparams(1, 5, FeatureMode.LOG2)
    rows = np.random.default_rng(8).integers(0, small_dataset.n_rows, size=small_dataset.n_rows)
    shared = grow_tree(small_dataset.X, small_dataset.y, rows, hp, np.random.default_rng(1),
                       order=presort(small_dataset.X))
    fresh = grow_tree(small_dataset.X, small_dataset.y, rows, hp, np.random.default_rng(1))
    assert shared == fresh


def test_all_features_forest_trains_within_budget():
    data = generate(SynthConfig(n_rows=30_000, attack_fraction=0.6, n_features=82,
                                class_separation=0.5, noise_std=1.0, seed=21))
    start = time.perf_counter()
    model = fit_forest(data.X, data.y, ForestHyperparams(10, 10, FeatureMode.ALL))
    elapsed = time.perf_counter() - start
    assert len(model.trees) == 10
    assert elapsed < 60.0, f"{elapsed:.1f}s"

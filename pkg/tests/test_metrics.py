import numpy as np
import pytest

from src.errors import DataFormatError
from src.forest import ForestHyperparams, fit_forest, predict
from src.metrics import (F1_ZERO_DENOMINATOR, PRECISION_ZERO_DENOMINATOR,
                         RECALL_ZERO_DENOMINATOR, ROC_AUC_UNDEFINED, ConfusionMatrix,
                         MetricsReport, build_report, confusion, derive_metrics, evaluate,
                         roc_auc, time_predict)


def test_confusion_counts():
    m = confusion(np.array([1, 1, 0, 0]), np.array([1, 0, 0, 1]))
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)


def test_confusion_degenerate_corners():
    perfect = confusion(np.array([1, 0, 1]), np.array([1, 0, 1]))
    assert perfect.fp == perfect.fn == 0
    flipped = confusion(np.zeros(4, dtype=int), np.ones(4, dtype=int))
    assert (flipped.tp, flipped.fp, flipped.fn, flipped.tn) == (0, 4, 0, 0)


def test_confusion_length_mismatch():
    with pytest.raises(DataFormatError):
        confusion(np.array([1, 0]), np.array([1]))


def test_reference_confusion_matrix_arithmetic():
    derived = derive_metrics(ConfusionMatrix(tp=5_867_033, fp=2, fn=7, tn=36_180))
    assert derived.accuracy == pytest.approx(0.99999848, abs=1e-7)
    assert derived.precision == pytest.approx(0.99999966, abs=1e-7)
    assert derived.recall == pytest.approx(0.99999881, abs=1e-7)
    assert derived.f1 == pytest.approx(0.99999923, abs=1e-7)
    assert derived.degenerate_flags == frozenset()


def test_f1_of_equal_precision_and_recall():
    derived = derive_metrics(ConfusionMatrix(tp=3, fp=1, fn=1, tn=5))
    assert derived.precision == derived.recall == 0.75
    assert derived.f1 == pytest.approx(0.75, abs=1e-12)


def test_f1_harmonic_mean():
    # P = 0.5, R = 1.0
    derived = derive_metrics(ConfusionMatrix(tp=2, fp=2, fn=0, tn=1))
    assert derived.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_zero_denominators_are_flagged():
    derived = derive_metrics(ConfusionMatrix(tp=0, fp=0, fn=3, tn=2))
    assert derived.precision == 0.0
    assert derived.f1 == 0.0
    assert {PRECISION_ZERO_DENOMINATOR, F1_ZERO_DENOMINATOR} <= derived.degenerate_flags
    only_negatives = derive_metrics(ConfusionMatrix(tn=5))
    assert RECALL_ZERO_DENOMINATOR in only_negatives.degenerate_flags


def test_empty_matrix_is_an_error():
    with pytest.raises(DataFormatError):
        derive_metrics(ConfusionMatrix())


@pytest.mark.parametrize("labels,scores,expected", [
    ([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.1], 1.0),
    ([1, 0], [0.5, 0.5], 0.5),
    ([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.6], 0.75),
])
def test_roc_auc_examples(labels, scores, expected):
    assert roc_auc(np.array(labels), np.array(scores)) == pytest.approx(expected, abs=1e-12)


def test_roc_auc_single_class_is_undefined():
    with pytest.raises(DataFormatError):
        roc_auc(np.ones(3, dtype=int), np.array([0.1, 0.2, 0.3]))


def _pair_counting_auc(labels, scores):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.shape[0] * neg.shape[0])


def test_roc_auc_matches_pair_counting():
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 1000:
        n = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            continue
        # votos de 20 árvores: muitos empates
        scores = rng.integers(0, 21, size=n) / 20.0
        assert roc_auc(labels, scores) == pytest.approx(_pair_counting_auc(labels, scores), abs=1e-12)
        checked += 1


def test_roc_auc_invariant_under_increasing_transform(rng):
    labels = rng.integers(0, 2, size=300)
    labels[:2] = [0, 1]
    scores = rng.random(300)
    assert roc_auc(labels, np.exp(3 * scores) - 7) == pytest.approx(roc_auc(labels, scores), abs=1e-12)


def test_accuracy_equals_match_fraction(rng):
    y_true = rng.integers(0, 2, size=500)
    y_pred = rng.integers(0, 2, size=500)
    accuracy = derive_metrics(confusion(y_true, y_pred)).accuracy
    assert accuracy == pytest.approx(np.mean(y_true == y_pred), abs=1e-12)


def test_time_predict_is_positive_and_does_not_alter_labels(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(5, 4))
    labels, seconds = time_predict(model, small_dataset.X)
    assert seconds > 0
    np.testing.assert_array_equal(labels, predict(model, small_dataset.X))


def test_build_report_flags_single_class_partition():
    report = build_report(np.ones(4, dtype=int), np.ones(4, dtype=int), np.ones(4), 0.01)
    assert report.roc_auc == 0.0
    assert ROC_AUC_UNDEFINED in report.degenerate_flags
    assert report.accuracy == 1.0


def test_report_json_keys_and_round_trip(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(5, 4))
    report, scores = evaluate(model, small_dataset.X, small_dataset.y)
    data = report.to_dict()
    assert list(data) == ["accuracy", "precision", "recall", "f1", "roc_auc", "pred_time_s",
                          "tp", "fp", "fn", "tn", "degenerate_flags"]
    assert MetricsReport.from_dict(data) == report
    assert scores.shape == (small_dataset.n_rows,)
    for name in ("accuracy", "precision", "recall", "f1", "roc_auc"):
        assert 0.0 <= data[name] <= 1.0


def test_without_timing_zeroes_only_the_time(small_dataset):
    model = fit_forest(small_dataset.X, small_dataset.y, ForestHyperparams(3, 3))
    report, _ = evaluate(model, small_dataset.X, small_dataset.y)
    stripped = report.without_timing()
    assert stripped.pred_time_s == 0.0
    assert stripped.matrix == report.matrix
    assert stripped.accuracy == report.accuracy

"""Execuções em escala de desktop; rodar com: pytest -m slow"""

import json
import os

import pytest

from src.crossval import CrossValConfig
from src.detector_syn import main
from src.errors import EXIT_OK
from src.flowdata import apply_scaler, fit_scaler, train_test_split
from src.forest import FeatureMode, ForestHyperparams, fit_forest
from src.metrics import time_predict
from src.synthgen import SynthConfig, generate
from src.tuner import GridSpec, finalize, grid_search


pytestmark = pytest.mark.slow

DESK_SCALE = SynthConfig(n_rows=163_000, attack_fraction=162 / 163, n_features=82,
                         class_separation=4.0, noise_std=1.0, seed=42)
BEST = ForestHyperparams(20, 10, FeatureMode.ALL, seed=42)


@pytest.fixture(scope="module")
def desk_dataset():
    return generate(DESK_SCALE)


def test_desk_scale_tune_and_finalize(desk_dataset):
    X = apply_scaler(desk_dataset.X, fit_scaler(desk_dataset.X))
    result = grid_search(X, desk_dataset.y, GridSpec(), CrossValConfig(5, random_state=42),
                         base_seed=42, n_jobs=-1)
    assert len(result.per_config) == 48

    train, test = train_test_split(desk_dataset, 0.2, seed=42)
    report = finalize(train, test, BEST, scaler=fit_scaler(desk_dataset.X))
    for name in ("accuracy", "precision", "recall", "f1"):
        assert getattr(report, name) >= 0.999, name


def test_prediction_throughput():
    train = generate(SynthConfig(n_rows=20_000, n_features=82, seed=1))
    model = fit_forest(train.X, train.y, BEST, n_jobs=-1)
    X = generate(SynthConfig(n_rows=1_000_000, n_features=82, seed=2)).X
    labels, seconds = time_predict(model, X, n_jobs=-1)
    assert labels.shape == (1_000_000,)
    assert 1_000_000 / seconds >= 10_000


@pytest.mark.skipif("SYN_REAL_CSV" not in os.environ,
                    reason="defina SYN_REAL_CSV com um CSV do dia Syn do CIC-DDoS2019")
def test_real_capture_subsample(tmp_path):
    out = tmp_path / "real"
    common = ["--input", os.environ["SYN_REAL_CSV"], "--output-dir", str(out),
              "--subsample", "0.01", "--threads", "-1"]
    assert main(["tune", *common]) == EXIT_OK
    assert main(["train", *common,
                 "--hyperparams-from", str(out / "best_hyperparams.json")]) == EXIT_OK
    metrics = json.loads((out / "train_report.json").read_text(encoding="utf-8"))["metrics"]
    for name in ("accuracy", "precision", "recall", "f1", "roc_auc"):
        assert metrics[name] >= 0.999, name

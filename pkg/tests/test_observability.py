import json

from src.flowdata import CleanStats
from src.forest import FeatureMode, ForestHyperparams
from src.metrics import ConfusionMatrix, MetricsReport
from src.observability import ObservabilityLogger


def _report() -> MetricsReport:
    return MetricsReport(0.99, 0.98, 1.0, 0.99, 0.995, 0.01, ConfusionMatrix(tp=98, fp=2, tn=50))


def test_entries_are_returned_as_dicts():
    logger = ObservabilityLogger()
    hp = ForestHyperparams(20, 10, FeatureMode.ALL)
    entry = logger.log_config_evaluation(0, 48, hp, _report())
    assert entry["combination"] == 1
    assert entry["total_combinations"] == 48
    assert entry["mean_metrics"]["tp"] == 98

    fold = logger.log_fold_evaluation(hp, 3, _report())
    assert fold["fold"] == 3
    assert fold["hyperparams"]["feature_mode"] == "all"


def test_error_entry_names_stage_and_type():
    entry = ObservabilityLogger().log_pipeline_error("tune", ValueError("fold vazio"),
                                                     {"grid": {}})
    assert entry["stage"] == "tune"
    assert entry["error_type"] == "ValueError"
    assert entry["error_message"] == "fold vazio"


def test_structured_log_file(tmp_path):
    path = tmp_path / "pipeline.log"
    logger = ObservabilityLogger(log_file=str(path), debug=True)
    logger.log_clean_stats("flows.csv", CleanStats(rows_in=10, rows_out=8, nonfinite_dropped=2))
    text = path.read_text(encoding="utf-8")
    assert "CLEAN_STATS" in text
    body = text[text.index("{"):text.rindex("}") + 1]
    assert json.loads(body)["clean_stats"]["nonfinite_dropped"] == 2


def test_plain_format_uses_summary(tmp_path):
    path = tmp_path / "plain.log"
    logger = ObservabilityLogger(log_file=str(path), structured_logging=False)
    logger.log_clean_stats("flows.csv", CleanStats(rows_in=5, rows_out=5))
    assert "Limpeza de flows.csv: 5 -> 5 linhas" in path.read_text(encoding="utf-8")

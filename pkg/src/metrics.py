"""
Métricas de avaliação

Matriz de confusão (ataque = classe positiva), acurácia, precisão, recall,
F1, ROC AUC por postos (Mann-Whitney com postos médios em empates) e tempo
de predição medido com relógio monotônico.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, NamedTuple, Tuple

import numpy as np
from scipy.stats import rankdata

try:
    from .errors import DataFormatError
    from .forest import ForestModel, predict, predict_score
except ImportError:
    from errors import DataFormatError
    from forest import ForestModel, predict, predict_score


PRECISION_ZERO_DENOMINATOR = "precision_zero_denominator"
RECALL_ZERO_DENOMINATOR = "recall_zero_denominator"
F1_ZERO_DENOMINATOR = "f1_zero_denominator"
ROC_AUC_UNDEFINED = "roc_auc_undefined"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> Dict:
        return {'tp': self.tp, 'fp': self.fp, 'fn': self.fn, 'tn': self.tn}


class DerivedMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate_flags: FrozenSet[str]


@dataclass(frozen=True)
class MetricsReport:
    """[Acc, Prec, Rec, F1, ROC, Time, Matrix] de uma avaliação."""
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    pred_time_s: float
    matrix: ConfusionMatrix
    degenerate_flags: FrozenSet[str] = field(default_factory=frozenset)

    def to_dict(self) -> Dict:
        data = {
            'accuracy': self.accuracy,
            'precision': self.precision,
            'recall': self.recall,
            'f1': self.f1,
            'roc_auc': self.roc_auc,
            'pred_time_s': self.pred_time_s,
        }
        data.update(self.matrix.to_dict())
        data['degenerate_flags'] = sorted(self.degenerate_flags)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "MetricsReport":
        return cls(
            accuracy=float(data['accuracy']),
            precision=float(data['precision']),
            recall=float(data['recall']),
            f1=float(data['f1']),
            roc_auc=float(data['roc_auc']),
            pred_time_s=float(data['pred_time_s']),
            matrix=ConfusionMatrix(int(data['tp']), int(data['fp']),
                                   int(data['fn']), int(data['tn'])),
            degenerate_flags=frozenset(data.get('degenerate_flags', [])),
        )

    def without_timing(self) -> "MetricsReport":
        return replace(self, pred_time_s=0.0)


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DataFormatError(
            f"Tamanhos incompatíveis: y_true {y_true.shape}, y_pred {y_pred.shape}"
        )
    if y_true.shape[0] == 0:
        raise DataFormatError("Nenhuma linha para avaliar")
    truth = y_true == 1
    guess = y_pred == 1
    return ConfusionMatrix(
        tp=int(np.count_nonzero(truth & guess)),
        fp=int(np.count_nonzero(~truth & guess)),
        fn=int(np.count_nonzero(truth & ~guess)),
        tn=int(np.count_nonzero(~truth & ~guess)),
    )


def derive_metrics(matrix: ConfusionMatrix) -> DerivedMetrics:
    """
    Precisão = TP/(TP+FP), Recall = TP/(TP+FN), F1 = 2PR/(P+R),
    Acurácia = (TP+TN)/total. Denominador zero -> 0.0 com flag.
    """
    if matrix.total <= 0:
        raise DataFormatError("Matriz de confusão vazia")
    flags = set()

    accuracy = (matrix.tp + matrix.tn) / matrix.total

    if matrix.tp + matrix.fp == 0:
        precision = 0.0
        flags.add(PRECISION_ZERO_DENOMINATOR)
    else:
        precision = matrix.tp / (matrix.tp + matrix.fp)

    if matrix.tp + matrix.fn == 0:
        recall = 0.0
        flags.add(RECALL_ZERO_DENOMINATOR)
    else:
        recall = matrix.tp / (matrix.tp + matrix.fn)

    if precision + recall == 0:
        f1 = 0.0
        flags.add(F1_ZERO_DENOMINATOR)
    else:
        f1 = 2 * precision * recall / (precision + recall)

    return DerivedMetrics(accuracy, precision, recall, f1, frozenset(flags))


def roc_auc(y_true: np.ndarray, scores: np.ndarray) -> float:
    """
    Probabilidade de um positivo aleatório ter score maior que um negativo
    aleatório (empates contam 1/2), via soma de postos médios.
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    if y_true.shape != scores.shape or y_true.ndim != 1:
        raise DataFormatError("y_true e scores devem ter o mesmo tamanho")
    positive = y_true == 1
    n_pos = int(positive.sum())
    n_neg = y_true.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataFormatError("ROC AUC indefinido: apenas uma classe presente")
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def time_predict(model: ForestModel, X: np.ndarray, n_jobs: int = 1) -> Tuple[np.ndarray, float]:
    """Predição e duração (s) apenas da chamada de predict."""
    start = time.perf_counter()
    labels = predict(model, X, n_jobs)
    elapsed = time.perf_counter() - start
    return labels, elapsed


def build_report(y_true: np.ndarray, y_pred: np.ndarray, scores: np.ndarray,
                 pred_time_s: float) -> MetricsReport:
    matrix = confusion(y_true, y_pred)
    derived = derive_metrics(matrix)
    flags = set(derived.degenerate_flags)
    try:
        auc = roc_auc(y_true, scores)
    except DataFormatError:
        auc = 0.0
        flags.add(ROC_AUC_UNDEFINED)
    return MetricsReport(derived.accuracy, derived.precision, derived.recall,
                         derived.f1, auc, pred_time_s, matrix, frozenset(flags))


def evaluate(model: ForestModel, X: np.ndarray, y_true: np.ndarray,
             n_jobs: int = 1) -> Tuple[MetricsReport, np.ndarray]:
    """
    Avaliação completa: predição cronometrada + scores (fora do cronômetro).

    Returns:
        (MetricsReport, scores)
    """
    labels, elapsed = time_predict(model, X, n_jobs)
    scores = predict_score(model, X, n_jobs)
    return build_report(y_true, labels, scores, elapsed), scores

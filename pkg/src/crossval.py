"""
Validação cruzada estratificada (K folds)

Cada fold de teste preserva a distribuição de classes do dataset; o laço
por fold treina, prediz com cronômetro e registra
[Acc, Prec, Rec, F1, ROC, Time, Matrix].
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

try:
    from .errors import ConfigError, DataFormatError, TrainingError
    from .flowdata import SCALING_MODES, apply_scaler, fit_scaler
    from .fold_aggregator import FoldAggregator
    from .forest import ForestHyperparams, derive_seed, fit_forest
    from .metrics import MetricsReport, evaluate
except ImportError:
    from errors import ConfigError, DataFormatError, TrainingError
    from flowdata import SCALING_MODES, apply_scaler, fit_scaler
    from fold_aggregator import FoldAggregator
    from forest import ForestHyperparams, derive_seed, fit_forest
    from metrics import MetricsReport, evaluate


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrossValConfig:
    n_splits: int = 5
    shuffle: bool = True
    random_state: int = 42

    def __post_init__(self):
        if self.n_splits < 2:
            raise ConfigError(f"n_splits deve ser >= 2, recebido {self.n_splits}")

    def to_dict(self) -> Dict:
        return {'n_splits': self.n_splits, 'shuffle': self.shuffle,
                'random_state': self.random_state}


@dataclass
class SplitPlan:
    """Lista de (índices de treino, índices de teste), um par por fold."""
    folds: List[Tuple[np.ndarray, np.ndarray]]
    n_rows: int

    @property
    def n_splits(self) -> int:
        return len(self.folds)


def stratified_kfold(y: np.ndarray, cfg: CrossValConfig = CrossValConfig()) -> SplitPlan:
    """
    Monta os folds estratificados.

    As cotas por classe são distribuídas em rodízio sobre os rótulos
    ordenados (contagens por classe diferem em no máximo 1 entre folds e os
    tamanhos dos folds ficam equilibrados). Os membros de cada classe são
    embaralhados com random_state e repartidos em grupos contíguos.
    """
    y = np.asarray(y, dtype=np.int64)
    n_splits = cfg.n_splits
    counts = np.bincount(y, minlength=2)
    for label, count in enumerate(counts):
        if count < n_splits:
            raise DataFormatError(
                f"Classe {label} tem {count} linha(s), menos que n_splits={n_splits}"
            )

    y_order = np.sort(y)
    allocation = np.asarray([
        np.bincount(y_order[i::n_splits], minlength=counts.shape[0])
        for i in range(n_splits)
    ])

    rng = np.random.default_rng(cfg.random_state)
    test_folds = np.empty(y.shape[0], dtype=np.int64)
    for label in range(counts.shape[0]):
        members = np.flatnonzero(y == label)
        if cfg.shuffle:
            members = rng.permutation(members)
        test_folds[members] = np.repeat(np.arange(n_splits), allocation[:, label])

    folds = [(np.flatnonzero(test_folds != k), np.flatnonzero(test_folds == k))
             for k in range(n_splits)]
    return SplitPlan(folds, y.shape[0])


@dataclass
class CrossValResult:
    """Relatórios por fold e os agregados 'mean' e 'pooled'."""
    fold_reports: List[MetricsReport]
    mean: MetricsReport
    pooled: MetricsReport
    scaling_mode: str = "paper"

    def to_dict(self) -> Dict:
        return {
            'scaling_mode': self.scaling_mode,
            'mean': self.mean.to_dict(),
            'pooled': self.pooled.to_dict(),
            'folds': [r.to_dict() for r in self.fold_reports],
        }

    def fold_rows(self) -> List[Dict]:
        """Uma linha por fold (CSV para gráficos)."""
        return [dict(fold=k, **r.to_dict()) for k, r in enumerate(self.fold_reports)]


def cross_val_model(hyperparams: ForestHyperparams, X: np.ndarray, y: np.ndarray,
                    plan: SplitPlan, scaling_mode: str = "paper",
                    n_jobs: int = 1,
                    on_fold: Optional[Callable[[int, MetricsReport], None]] = None,
                    debug: bool = False) -> CrossValResult:
    """
    Treina e avalia uma floresta por fold.

    Args:
        hyperparams: Hiperparâmetros; a semente de cada fold deriva de (seed, fold)
        X: Matriz já padronizada (modo paper) ou bruta (modo strict)
        y: Rótulos
        plan: Folds de stratified_kfold
        scaling_mode: 'paper' (X chega padronizado) ou 'strict' (scaler por fold)
        n_jobs: Paralelismo no treino das árvores
        on_fold: Callback opcional (fold, relatório), ex.: log estruturado
    """
    if scaling_mode not in SCALING_MODES:
        raise ConfigError(f"scaling_mode inválido: '{scaling_mode}'")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if plan.n_rows != y.shape[0] or X.shape[0] != y.shape[0]:
        raise DataFormatError(
            f"Plano de folds para {plan.n_rows} linhas, dados com {y.shape[0]}"
        )

    aggregator = FoldAggregator(debug=debug)
    for k, (train_idx, test_idx) in enumerate(plan.folds):
        y_train = y[train_idx]
        if np.unique(y_train).shape[0] < 2:
            raise TrainingError(f"Fold {k}: partição de treino com uma única classe", fold=k)

        X_train, X_test = X[train_idx], X[test_idx]
        if scaling_mode == "strict":
            params = fit_scaler(X_train)
            X_train = apply_scaler(X_train, params)
            X_test = apply_scaler(X_test, params)

        model = fit_forest(X_train, y_train,
                           hyperparams.with_seed(derive_seed(hyperparams.seed, k)),
                           n_jobs=n_jobs)
        report, scores = evaluate(model, X_test, y[test_idx])
        aggregator.add_fold(report, y[test_idx], scores)
        if on_fold is not None:
            on_fold(k, report)

    return CrossValResult(list(aggregator.fold_reports), aggregator.mean_report(),
                          aggregator.pooled_report(), scaling_mode)

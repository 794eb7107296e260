"""
Ajuste fino de hiperparâmetros por busca exaustiva

Percorre o produto cartesiano estimadores x profundidade x modo de atributos
(nessa ordem), avalia cada combinação por validação cruzada e mantém a
melhor segundo a regra:

    acurácia > melhor_acurácia
    ou (acurácia == melhor_acurácia e tempo < melhor_tempo)

Empates exatos mantêm a primeira combinação.
"""

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

try:
    from .crossval import CrossValConfig, cross_val_model, stratified_kfold
    from .errors import ConfigError, SynDetectError, TuningError
    from .flowdata import Dataset, ScalerParams, apply_scaler, fit_scaler
    from .forest import FeatureMode, ForestHyperparams, ForestModel, fit_forest
    from .metrics import MetricsReport, evaluate
    from .model_store import save_model
except ImportError:
    from crossval import CrossValConfig, cross_val_model, stratified_kfold
    from errors import ConfigError, SynDetectError, TuningError
    from flowdata import Dataset, ScalerParams, apply_scaler, fit_scaler
    from forest import FeatureMode, ForestHyperparams, ForestModel, fit_forest
    from metrics import MetricsReport, evaluate
    from model_store import save_model


logger = logging.getLogger(__name__)

DEFAULT_ESTIMATORS = (10, 20, 50, 100)
DEFAULT_DEPTHS = (5, 10, 15, 20)
DEFAULT_FEATURES = (FeatureMode.SQRT, FeatureMode.LOG2, FeatureMode.ALL)

CSV_COLUMNS = ['n_estimators', 'max_depth', 'feature_mode', 'accuracy', 'f1',
               'recall', 'roc_auc', 'pred_time_s', 'precision']

# métricas das séries por modo de atributos
SERIES_METRICS = ['accuracy', 'f1', 'recall', 'roc_auc', 'pred_time_s']

SUMMARY_COLUMNS = ['method', 'validation', 'n_estimators', 'max_depth', 'feature_mode',
                   'accuracy', 'precision', 'recall', 'f1', 'roc_auc', 'time_s']


@dataclass(frozen=True)
class GridSpec:
    estimator_options: Tuple[int, ...] = DEFAULT_ESTIMATORS
    depth_options: Tuple[int, ...] = DEFAULT_DEPTHS
    feature_options: Tuple[FeatureMode, ...] = DEFAULT_FEATURES

    def __post_init__(self):
        object.__setattr__(self, 'estimator_options', tuple(int(v) for v in self.estimator_options))
        object.__setattr__(self, 'depth_options', tuple(int(v) for v in self.depth_options))
        object.__setattr__(self, 'feature_options',
                           tuple(FeatureMode.parse(v) for v in self.feature_options))
        for name in ('estimator_options', 'depth_options', 'feature_options'):
            if not getattr(self, name):
                raise ConfigError(f"Grid vazio: {name}")
        if min(self.estimator_options) < 1:
            raise ConfigError("Opções de n_estimators devem ser >= 1")
        if min(self.depth_options) < 1:
            raise ConfigError("Opções de max_depth devem ser >= 1")

    @property
    def size(self) -> int:
        return len(self.estimator_options) * len(self.depth_options) * len(self.feature_options)

    def combinations(self, seed: int = 42) -> List[ForestHyperparams]:
        """Combinações na ordem canônica (estimadores, profundidade, atributos)."""
        return [
            ForestHyperparams(n_estimators=n, max_depth=d, feature_mode=f, seed=seed)
            for n, d, f in itertools.product(self.estimator_options,
                                             self.depth_options,
                                             self.feature_options)
        ]

    def to_dict(self) -> Dict:
        return {
            'estimator_options': list(self.estimator_options),
            'depth_options': list(self.depth_options),
            'feature_options': [f.value for f in self.feature_options],
        }


@dataclass(frozen=True)
class TuneEntry:
    hyperparams: ForestHyperparams
    mean: MetricsReport
    pooled: Optional[MetricsReport] = None
    fold_reports: Tuple[MetricsReport, ...] = ()

    def to_dict(self) -> Dict:
        data = {'hyperparams': self.hyperparams.to_dict(), 'mean': self.mean.to_dict()}
        if self.pooled is not None:
            data['pooled'] = self.pooled.to_dict()
        data['folds'] = [r.to_dict() for r in self.fold_reports]
        return data

    def without_timing(self) -> "TuneEntry":
        return replace(
            self,
            mean=self.mean.without_timing(),
            pooled=self.pooled.without_timing() if self.pooled is not None else None,
            fold_reports=tuple(r.without_timing() for r in self.fold_reports),
        )


@dataclass
class TuneResult:
    per_config: List[TuneEntry]
    best: ForestHyperparams
    best_accuracy: float
    best_pred_time: float
    grid: GridSpec = field(default_factory=GridSpec)
    cv: CrossValConfig = field(default_factory=CrossValConfig)
    scaling_mode: str = "paper"

    def best_entry(self) -> TuneEntry:
        return next(e for e in self.per_config if e.hyperparams == self.best)

    def to_dict(self) -> Dict:
        return {
            'best': self.best.to_dict(),
            'best_accuracy': self.best_accuracy,
            'best_pred_time': self.best_pred_time,
            'grid': self.grid.to_dict(),
            'cv': self.cv.to_dict(),
            'scaling_mode': self.scaling_mode,
            'per_config': [e.to_dict() for e in self.per_config],
        }

    def to_csv_rows(self) -> List[Dict]:
        """Uma linha por configuração, na ordem canônica."""
        rows = []
        for entry in self.per_config:
            hp, report = entry.hyperparams, entry.mean
            rows.append({
                'n_estimators': hp.n_estimators,
                'max_depth': hp.max_depth,
                'feature_mode': hp.feature_mode.value,
                'accuracy': report.accuracy,
                'f1': report.f1,
                'recall': report.recall,
                'roc_auc': report.roc_auc,
                'pred_time_s': report.pred_time_s,
                'precision': report.precision,
            })
        return rows

    def feature_mode_series(self) -> List[Dict]:
        """
        Cada métrica em função do número de estimadores, uma série por modo
        de atributos (média sobre as profundidades avaliadas).
        """
        modes = list(dict.fromkeys(e.hyperparams.feature_mode for e in self.per_config))
        estimators = list(dict.fromkeys(e.hyperparams.n_estimators for e in self.per_config))
        rows = []
        for mode in modes:
            for n in estimators:
                reports = [e.mean for e in self.per_config
                           if e.hyperparams.feature_mode is mode
                           and e.hyperparams.n_estimators == n]
                if not reports:
                    continue
                row = {'feature_mode': mode.value, 'n_estimators': n,
                       'n_depths': len(reports)}
                for name in SERIES_METRICS:
                    row[name] = float(np.mean([getattr(r, name) for r in reports]))
                rows.append(row)
        return rows

    def fold_csv_rows(self) -> List[Dict]:
        """Uma linha por configuração x fold."""
        rows = []
        for entry in self.per_config:
            hp = entry.hyperparams
            for k, report in enumerate(entry.fold_reports):
                row = {'n_estimators': hp.n_estimators, 'max_depth': hp.max_depth,
                       'feature_mode': hp.feature_mode.value, 'fold': k}
                row.update(report.to_dict())
                row['degenerate_flags'] = ";".join(row['degenerate_flags'])
                rows.append(row)
        return rows

    def without_timing(self) -> "TuneResult":
        """
        Cópia com todos os tempos zerados; a melhor combinação é recalculada
        pela mesma regra, o que reduz o desempate à ordem canônica.
        """
        entries = [e.without_timing() for e in self.per_config]
        best, accuracy, pred_time = select_best(entries)
        return replace(self, per_config=entries, best=best,
                       best_accuracy=accuracy, best_pred_time=pred_time)


def select_best(entries: Sequence[TuneEntry]) -> Tuple[ForestHyperparams, float, float]:
    """Reaplica a regra de seleção na ordem dada; retorna (best, acc, tempo)."""
    if not entries:
        raise ConfigError("Nenhuma combinação avaliada")
    best_accuracy = -math.inf
    best_pred_time = math.inf
    best = None
    for entry in entries:
        accuracy, pred_time = entry.mean.accuracy, entry.mean.pred_time_s
        if accuracy > best_accuracy or (accuracy == best_accuracy and pred_time < best_pred_time):
            best_accuracy, best_pred_time, best = accuracy, pred_time, entry.hyperparams
    return best, best_accuracy, best_pred_time


Evaluator = Callable[..., object]


def _evaluate_combination(evaluator: Evaluator, hyperparams: ForestHyperparams,
                          X: np.ndarray, y: np.ndarray, plan, scaling_mode: str,
                          n_jobs: int, on_fold) -> TuneEntry:
    try:
        kwargs = {'scaling_mode': scaling_mode, 'n_jobs': n_jobs}
        if on_fold is not None:
            kwargs['on_fold'] = functools.partial(on_fold, hyperparams)
        result = evaluator(hyperparams, X, y, plan, **kwargs)
    except (SynDetectError, ValueError, ArithmeticError) as e:
        raise TuningError(hyperparams.to_dict(), e) from e
    return TuneEntry(hyperparams, result.mean,
                     getattr(result, 'pooled', None),
                     tuple(getattr(result, 'fold_reports', ())))


def grid_search(X_scaled: np.ndarray, y: np.ndarray,
                grid: GridSpec = GridSpec(),
                cv: CrossValConfig = CrossValConfig(),
                base_seed: int = 42,
                scaling_mode: str = "paper",
                evaluate: Evaluator = cross_val_model,
                n_jobs: int = 1,
                on_fold: Optional[Callable] = None,
                on_config: Optional[Callable[[int, TuneEntry], None]] = None) -> TuneResult:
    """
    Avalia todas as combinações do grid e escolhe a melhor.

    Args:
        X_scaled: Atributos (padronizados no modo paper)
        y: Rótulos
        grid: Opções de hiperparâmetros
        cv: Configuração da validação cruzada (folds iguais para todas as combinações)
        base_seed: Semente das florestas
        evaluate: Função (hp, X, y, plan, scaling_mode=..., n_jobs=...) com
            atributo .mean no retorno; substituível por uma tabela nos testes
        n_jobs: Combinações avaliadas em paralelo (o vencedor não muda)
        on_fold: Callback (hiperparâmetros, fold, relatório), só usado em
            execução sequencial
        on_config: Callback (índice, entrada), chamado na ordem canônica
    """
    plan = stratified_kfold(y, cv)
    combinations = grid.combinations(base_seed)
    logger.info(f"Grid search: {len(combinations)} combinações x {cv.n_splits} folds")

    if n_jobs == 1:
        entries = []
        for index, hyperparams in enumerate(combinations):
            entry = _evaluate_combination(evaluate, hyperparams, X_scaled, y, plan,
                                          scaling_mode, 1, on_fold)
            entries.append(entry)
            if on_config is not None:
                on_config(index, entry)
    else:
        entries = Parallel(n_jobs=n_jobs)(
            delayed(_evaluate_combination)(evaluate, hyperparams, X_scaled, y, plan,
                                           scaling_mode, 1, None)
            for hyperparams in combinations
        )
        if on_config is not None:
            for index, entry in enumerate(entries):
                on_config(index, entry)

    best, best_accuracy, best_pred_time = select_best(entries)
    logger.info(
        f"Melhor combinação: {best.n_estimators} estimadores, profundidade {best.max_depth}, "
        f"atributos {best.feature_mode.value} (acc={best_accuracy:.6f}, "
        f"tempo={best_pred_time:.4f}s)"
    )
    return TuneResult(list(entries), best, best_accuracy, best_pred_time,
                      grid, cv, scaling_mode)


def finalize_model(train: Dataset, test: Dataset, best: ForestHyperparams,
                   scaling_mode: str = "paper",
                   scaler: Optional[ScalerParams] = None,
                   model_path: Optional[str] = None,
                   n_jobs: int = 1) -> Tuple[ForestModel, MetricsReport]:
    """
    Treina a floresta final em todo o treino e avalia uma vez no teste.

    Args:
        scaler: Parâmetros já ajustados (modo paper: ajustados no dataset
            inteiro); se None, são ajustados no treino
        model_path: Se informado, o modelo (com o scaler) é gravado ali
    """
    if train.n_features != test.n_features:
        raise ConfigError(
            f"Treino com {train.n_features} atributos, teste com {test.n_features}"
        )
    if scaler is None:
        scaler = fit_scaler(train.X)
    model = fit_forest(apply_scaler(train.X, scaler), train.y, best, n_jobs=n_jobs)
    model.scaler = scaler
    model.scaling_mode = scaling_mode
    model.feature_names = list(train.feature_names)
    report, _ = evaluate(model, apply_scaler(test.X, scaler), test.y, n_jobs)
    if model_path is not None:
        save_model(model, model_path)
    return model, report


def finalize(train: Dataset, test: Dataset, best: ForestHyperparams,
             model_path: Optional[str] = None, **kwargs) -> MetricsReport:
    """Relatório completo do modelo final no conjunto de teste."""
    _, report = finalize_model(train, test, best, model_path=model_path, **kwargs)
    return report


def method_summary(hyperparams: ForestHyperparams, report: MetricsReport,
                   validation: str, method: str = "FT-RF") -> Dict:
    """Linha de comparação entre métodos: as cinco métricas e o tempo de detecção."""
    return {
        'method': method,
        'validation': validation,
        'n_estimators': hyperparams.n_estimators,
        'max_depth': hyperparams.max_depth,
        'feature_mode': hyperparams.feature_mode.value,
        'accuracy': report.accuracy,
        'precision': report.precision,
        'recall': report.recall,
        'f1': report.f1,
        'roc_auc': report.roc_auc,
        'time_s': report.pred_time_s,
    }

"""
Módulo de Agregação de Folds - Validação Cruzada

Um único fold não basta para julgar uma configuração. Acumula os relatórios
por fold e produz dois agregados:
- "mean": média aritmética de cada métrica escalar (destaque, como no resumo)
- "pooled": métricas da matriz de confusão somada, com ROC AUC sobre os
  scores fora-do-fold concatenados
"""

import logging
from typing import Dict, List

import numpy as np

try:
    from .metrics import (ConfusionMatrix, MetricsReport, ROC_AUC_UNDEFINED,
                          derive_metrics, roc_auc)
    from .errors import DataFormatError
except ImportError:
    from metrics import (ConfusionMatrix, MetricsReport, ROC_AUC_UNDEFINED,
                         derive_metrics, roc_auc)
    from errors import DataFormatError


class FoldAggregator:
    """Agregador de relatórios por fold."""

    def __init__(self, debug: bool = False):
        """
        Args:
            debug: Se True, registra o estado a cada fold
        """
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        self.reset()

    def add_fold(self, report: MetricsReport, y_true: np.ndarray,
                 scores: np.ndarray) -> None:
        """Adiciona o relatório de um fold."""
        self.fold_reports.append(report)
        self.matrix = self.matrix + report.matrix
        self.total_pred_time_s += report.pred_time_s
        self._labels.append(np.asarray(y_true))
        self._scores.append(np.asarray(scores, dtype=np.float64))

        if self.debug:
            stats = self.get_statistics()
            self.logger.debug(
                f"Fold {stats['folds'] - 1}: acc={report.accuracy:.6f}, "
                f"tempo={report.pred_time_s:.4f}s | acumulado: "
                f"média={stats['mean_accuracy']:.6f}, pooled={stats['pooled_accuracy']:.6f}, "
                f"{stats['correct']}/{stats['rows']} corretas"
            )

    def reset(self):
        """Reseta o agregador (uma instância por configuração)."""
        self.fold_reports: List[MetricsReport] = []
        self.matrix = ConfusionMatrix()
        self.total_pred_time_s = 0.0
        self._labels: List[np.ndarray] = []
        self._scores: List[np.ndarray] = []

    def mean_report(self) -> MetricsReport:
        """Média de cada métrica escalar + matriz somada célula a célula."""
        if not self.fold_reports:
            raise DataFormatError("Nenhum fold agregado")
        reports = self.fold_reports

        def mean(name: str) -> float:
            return float(np.mean([getattr(r, name) for r in reports]))

        flags = frozenset().union(*(r.degenerate_flags for r in reports))
        return MetricsReport(
            accuracy=mean('accuracy'),
            precision=mean('precision'),
            recall=mean('recall'),
            f1=mean('f1'),
            roc_auc=mean('roc_auc'),
            pred_time_s=mean('pred_time_s'),
            matrix=self.matrix,
            degenerate_flags=flags,
        )

    def pooled_report(self) -> MetricsReport:
        """Métricas da matriz somada; tempo = soma dos tempos por fold."""
        if not self.fold_reports:
            raise DataFormatError("Nenhum fold agregado")
        derived = derive_metrics(self.matrix)
        flags = set(derived.degenerate_flags)
        try:
            auc = roc_auc(np.concatenate(self._labels), np.concatenate(self._scores))
        except DataFormatError:
            auc = 0.0
            flags.add(ROC_AUC_UNDEFINED)
        return MetricsReport(derived.accuracy, derived.precision, derived.recall,
                             derived.f1, auc, self.total_pred_time_s,
                             self.matrix, frozenset(flags))

    def get_statistics(self) -> Dict:
        """Estatísticas cumulativas de todos os folds processados."""
        n_folds = len(self.fold_reports)
        if n_folds == 0:
            return {
                'folds': 0,
                'rows': 0,
                'correct': 0,
                'mean_accuracy': 0.0,
                'pooled_accuracy': 0.0,
                'total_pred_time_s': 0.0,
            }
        correct = self.matrix.tp + self.matrix.tn
        return {
            'folds': n_folds,
            'rows': self.matrix.total,
            'correct': correct,
            'mean_accuracy': float(np.mean([r.accuracy for r in self.fold_reports])),
            'pooled_accuracy': correct / self.matrix.total,
            'total_pred_time_s': self.total_pred_time_s,
        }

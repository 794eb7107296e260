"""
Módulo de Observabilidade

Fornece logs estruturados do pipeline contendo:
- Estatísticas de limpeza do dataset
- Métricas por fold da validação cruzada
- Resultado agregado por combinação do grid
- Erros por estágio
"""

import json
import logging
from typing import Dict, Optional
from datetime import datetime

try:
    from .flowdata import CleanStats
    from .forest import ForestHyperparams
    from .metrics import MetricsReport
except ImportError:
    from flowdata import CleanStats
    from forest import ForestHyperparams
    from metrics import MetricsReport


class ObservabilityLogger:
    """
    Sistema de observabilidade com logs estruturados.

    Permite inspeção completa do pipeline em modo debug.
    """

    def __init__(self,
                 log_file: Optional[str] = None,
                 debug: bool = False,
                 structured_logging: bool = True):
        """
        Args:
            log_file: Caminho para arquivo de log (None = apenas console)
            debug: Se True, habilita logs detalhados
            structured_logging: Se True, usa formato JSON estruturado
        """
        self.log_file = log_file
        self.debug = debug
        self.structured_logging = structured_logging

        self.logger = logging.getLogger(__name__)
        self.logger.setLevel(logging.DEBUG if debug else logging.INFO)
        # instâncias repetidas no mesmo processo não duplicam handlers
        for handler in list(self.logger.handlers):
            self.logger.removeHandler(handler)
            handler.close()
        self.logger.propagate = False

        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.DEBUG if debug else logging.INFO)
        self.logger.addHandler(console_handler)

        if log_file:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setLevel(logging.DEBUG)
            self.logger.addHandler(file_handler)

        if structured_logging:
            formatter = logging.Formatter('%(asctime)s | %(levelname)s | %(message)s')
        else:
            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            )
        for handler in self.logger.handlers:
            handler.setFormatter(formatter)

    def _emit(self, level: int, tag: str, entry: Dict, summary: str):
        if self.structured_logging:
            log_json = json.dumps(entry, indent=2, default=str)
            self.logger.log(level, f"{tag}\n{log_json}")
        else:
            self.logger.log(level, summary)

    def log_clean_stats(self, source: str, stats: CleanStats) -> Dict:
        """Registra o resultado da limpeza de um CSV de fluxos."""
        log_entry = {
            'timestamp': datetime.now().isoformat(),
            'source': str(source),
            'clean_stats': stats.to_dict(),
        }
        self._emit(logging.INFO, "CLEAN_STATS", log_entry,
                   f"Limpeza de {source}: {stats.rows_in} -> {stats.rows_out} linhas "
                   f"({stats.nonfinite_dropped} não finitas, "
                   f"{stats.duplicates_dropped} duplicadas)")
        return log_entry

    def log_fold_evaluation(self, hyperparams: ForestHyperparams, fold: int,
                            report: MetricsReport) -> Dict:
        """
        Registra a avaliação de um fold.

        Returns:
            Dicionário com log estruturado
        """
        log_entry = {
            'hyperparams': hyperparams.to_dict(),
            'fold': fold,
            'metrics': report.to_dict(),
        }
        self._emit(logging.DEBUG, "FOLD_EVALUATION", log_entry,
                   f"Fold {fold} ({hyperparams.n_estimators}/{hyperparams.max_depth}/"
                   f"{hyperparams.feature_mode.value}): acc={report.accuracy:.6f}, "
                   f"tempo={report.pred_time_s:.4f}s")
        return log_entry

    def log_config_evaluation(self, index: int, total: int,
                              hyperparams: ForestHyperparams,
                              mean: MetricsReport) -> Dict:
        """Registra o agregado (média dos folds) de uma combinação do grid."""
        log_entry = {
            'timestamp': datetime.now().isoformat(),
            'combination': index + 1,
            'total_combinations': total,
            'hyperparams': hyperparams.to_dict(),
            'mean_metrics': mean.to_dict(),
        }
        self._emit(logging.INFO, "CONFIG_EVALUATION", log_entry,
                   f"[{index + 1}/{total}] {hyperparams.n_estimators} estimadores, "
                   f"profundidade {hyperparams.max_depth}, {hyperparams.feature_mode.value}: "
                   f"acc={mean.accuracy:.6f}, tempo={mean.pred_time_s:.4f}s")
        return log_entry

    def log_pipeline_error(self, stage: str, error: Exception, context: Dict = None) -> Dict:
        """Registra erro em um estágio do pipeline."""
        error_entry = {
            'timestamp': datetime.now().isoformat(),
            'stage': stage,
            'error_type': type(error).__name__,
            'error_message': str(error),
            'context': context or {}
        }
        self._emit(logging.ERROR, "PIPELINE_ERROR", error_entry,
                   f"Erro no estágio {stage}: {error}")
        return error_entry

"""
Pipeline Principal de Detecção de SYN DoS - Arquitetura Multiestágio

Orquestra todos os estágios:
1. Preparação (conversão de tipos, remoção de redundâncias)
2. Padronização (modo paper: dataset inteiro; modo strict: só treino)
3. Ajuste fino (grid search com validação cruzada estratificada)
4. Treino final e avaliação no conjunto de teste
5. Predição em lote com cronômetro
6. Observabilidade (logs estruturados)
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

try:
    from .crossval import CrossValConfig
    from .errors import DataFormatError
    from .flowdata import (CleanPolicy, CleanStats, Dataset, ScalerParams, apply_scaler,
                           feature_matrix, fit_scaler, load_csv, clean,
                           stratified_subsample, train_test_split)
    from .forest import ForestHyperparams, ForestModel, predict_score
    from .metrics import MetricsReport, build_report, time_predict
    from .model_store import load_model
    from .observability import ObservabilityLogger
    from .synthgen import SynthConfig, write_csv
    from .tuner import GridSpec, TuneResult, finalize_model, grid_search
except ImportError:
    from crossval import CrossValConfig
    from errors import DataFormatError
    from flowdata import (CleanPolicy, CleanStats, Dataset, ScalerParams, apply_scaler,
                          feature_matrix, fit_scaler, load_csv, clean,
                          stratified_subsample, train_test_split)
    from forest import ForestHyperparams, ForestModel, predict_score
    from metrics import MetricsReport, build_report, time_predict
    from model_store import load_model
    from observability import ObservabilityLogger
    from synthgen import SynthConfig, write_csv
    from tuner import GridSpec, TuneResult, finalize_model, grid_search


@dataclass
class PredictionResult:
    labels: np.ndarray
    scores: np.ndarray
    seconds: float
    report: Optional[MetricsReport] = None

    @property
    def rows(self) -> int:
        return int(self.labels.shape[0])

    def timing_summary(self) -> Dict:
        summary = {
            'rows': self.rows,
            'seconds': self.seconds,
            # null quando o cronômetro não registra tempo
            'rows_per_second': self.rows / self.seconds if self.seconds > 0 else None,
        }
        if self.report is not None:
            summary['metrics'] = self.report.to_dict()
        return summary


def _check_feature_names(model: ForestModel, names) -> None:
    """Mesmas colunas, na mesma ordem, que no treino (modelos sem nomes não são checados)."""
    if model.feature_names is None:
        return
    for position, (got, expected) in enumerate(zip(names, model.feature_names)):
        if got != expected:
            raise DataFormatError(
                f"Coluna {position} é '{got}', modelo foi treinado com '{expected}' nessa posição",
                column=got,
            )


class SynDetectionPipeline:
    """
    Pipeline completo de detecção de ataques SYN.

    Cada estágio registra erros no logger estruturado e propaga a exceção.
    """

    def __init__(self,
                 n_jobs: int = 1,
                 log_file: Optional[str] = None,
                 debug: bool = False):
        """
        Args:
            n_jobs: Paralelismo (árvores no treino, combinações no grid, blocos na predição)
            log_file: Arquivo para logs estruturados (None = apenas console)
            debug: Se True, habilita modo debug completo
        """
        self.debug = debug
        self.n_jobs = n_jobs

        logging.basicConfig(
            level=logging.DEBUG if debug else logging.INFO,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        self.logger = logging.getLogger(__name__)

        self.observability = ObservabilityLogger(
            log_file=log_file,
            debug=debug,
            structured_logging=True
        )
        self.logger.debug("Pipeline inicializado")

    def synthesize(self, cfg: SynthConfig, path: str) -> Dataset:
        try:
            dataset = write_csv(cfg, path)
        except Exception as e:
            self.observability.log_pipeline_error('synth', e, {'path': str(path)})
            raise
        self.logger.info(f"{dataset.n_rows} linhas sintéticas gravadas em {path}")
        return dataset

    def prepare(self, input_path: str, policy: CleanPolicy,
                subsample: Optional[float] = None,
                seed: int = 42,
                has_header: bool = True) -> Tuple[Dataset, CleanStats]:
        """Estágio 1: carrega, converte e limpa; subamostra estratificada opcional."""
        try:
            dataset, stats = clean(load_csv(input_path, has_header), policy)
            self.observability.log_clean_stats(input_path, stats)
            if subsample is not None and subsample < 1.0:
                dataset = stratified_subsample(dataset, subsample, seed)
                self.logger.info(f"Subamostra estratificada: {dataset.n_rows} linhas")
            return dataset, stats
        except Exception as e:
            self.observability.log_pipeline_error('prepare', e, {'input': str(input_path)})
            raise

    def scale(self, X: np.ndarray, scaling_mode: str) -> Tuple[np.ndarray, Optional[ScalerParams]]:
        """
        Estágio 2. No modo paper o scaler é ajustado em X inteiro antes da
        divisão; no modo strict nada é feito aqui (cada partição de treino
        ajusta o seu).
        """
        if scaling_mode == "strict":
            return X, None
        params = fit_scaler(X)
        return apply_scaler(X, params), params

    def tune(self, dataset: Dataset, grid: GridSpec, cv: CrossValConfig,
             seed: int = 42, scaling_mode: str = "paper",
             progress: Optional[Callable[[int, int], None]] = None) -> TuneResult:
        """
        Estágio 3: grid search com validação cruzada.

        Args:
            progress: Callback (combinações concluídas, total)
        """
        total = grid.size
        try:
            X, _ = self.scale(dataset.X, scaling_mode)

            def on_config(index, entry):
                self.observability.log_config_evaluation(index, total, entry.hyperparams,
                                                         entry.mean)
                if progress is not None:
                    progress(index + 1, total)

            on_fold = self.observability.log_fold_evaluation if self.debug else None
            return grid_search(X, dataset.y, grid, cv, base_seed=seed,
                               scaling_mode=scaling_mode, n_jobs=self.n_jobs,
                               on_fold=on_fold, on_config=on_config)
        except Exception as e:
            self.observability.log_pipeline_error('tune', e, {'grid': grid.to_dict()})
            raise

    def train(self, dataset: Dataset, hyperparams: ForestHyperparams,
              scaling_mode: str = "paper", test_fraction: float = 0.2,
              seed: int = 42, model_path: Optional[str] = None) -> Tuple[ForestModel, MetricsReport, Dict]:
        """
        Estágio 4: divisão estratificada, treino final e avaliação.

        Returns:
            (modelo, relatório no teste, tamanhos das partições)
        """
        try:
            scaler = fit_scaler(dataset.X) if scaling_mode == "paper" else None
            train, test = train_test_split(dataset, test_fraction, seed)
            model, report = finalize_model(train, test, hyperparams,
                                           scaling_mode=scaling_mode, scaler=scaler,
                                           model_path=model_path, n_jobs=self.n_jobs)
        except Exception as e:
            self.observability.log_pipeline_error('train', e, {'hyperparams': hyperparams.to_dict()})
            raise
        self.logger.info(
            f"Modelo final: acc={report.accuracy:.6f}, f1={report.f1:.6f}, "
            f"tempo de predição={report.pred_time_s:.4f}s"
        )
        return model, report, {'n_train': train.n_rows, 'n_test': test.n_rows}

    def predict(self, model_path: str, input_path: str,
                policy: CleanPolicy, has_header: bool = True) -> PredictionResult:
        """Estágio 5: predição em lote; o scaler gravado no modelo é aplicado."""
        try:
            model = load_model(model_path)
            X, names, y = feature_matrix(load_csv(input_path, has_header), policy)
            if X.shape[1] != model.n_features_trained:
                raise DataFormatError(
                    f"Número de colunas incompatível: entrada tem {X.shape[1]}, "
                    f"modelo foi treinado com {model.n_features_trained}"
                )
            _check_feature_names(model, names)
            if model.scaler is not None:
                X = apply_scaler(X, model.scaler)
            labels, seconds = time_predict(model, X, self.n_jobs)
            scores = predict_score(model, X, self.n_jobs)
            report = build_report(y, labels, scores, seconds) if y is not None else None
        except Exception as e:
            self.observability.log_pipeline_error('predict', e, {
                'model': str(model_path), 'input': str(input_path)})
            raise
        self.logger.info(f"{labels.shape[0]} linhas classificadas em {seconds:.4f}s")
        return PredictionResult(labels, scores, seconds, report)

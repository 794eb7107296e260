"""
Detector de ataques SYN DoS com Random Forest ajustado

Comandos:
    synth    gera um CSV sintético no formato CICFlowMeter
    prepare  limpa um CSV de fluxos (tipos, não finitos, duplicatas)
    tune     grid search com validação cruzada estratificada
    train    treina o modelo final e avalia no conjunto de teste
    predict  classifica um CSV em lote com o modelo gravado

Uso:
    python -m src.detector_syn <comando> [opções]
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from colorama import Fore, Style, init

try:
    from .config import RunConfig, load_hyperparams
    from .detection_pipeline import SynDetectionPipeline
    from .errors import EXIT_OK, ConfigError, exit_code_for
    from .flowdata import write_dataset_csv
    from .metrics import MetricsReport
    from .tuner import CSV_COLUMNS, SUMMARY_COLUMNS, method_summary
except ImportError:
    from config import RunConfig, load_hyperparams
    from detection_pipeline import SynDetectionPipeline
    from errors import EXIT_OK, ConfigError, exit_code_for
    from flowdata import write_dataset_csv
    from metrics import MetricsReport
    from tuner import CSV_COLUMNS, SUMMARY_COLUMNS, method_summary


init(autoreset=True)


def _info(message: str):
    print(f"{Fore.CYAN}[INFO]{Style.RESET_ALL} {message}")


def _success(message: str):
    print(f"{Fore.GREEN}{Style.BRIGHT}[SUCESSO]{Style.RESET_ALL} {message}")


def _error(message: str):
    print(f"{Fore.RED}[ERRO]{Style.RESET_ALL} {message}", file=sys.stderr)


def _progress(done: int, total: int):
    print(f"{Fore.CYAN}[PROGRESSO]{Style.RESET_ALL} {done}/{total} combinações "
          f"({100.0 * done / total:.1f}%)")


def _write_json(data: Dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_table(rows: List[Dict], path: Path, columns: Optional[List[str]] = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, lineterminator="\n")
    return path


def imprimir_metricas(report: MetricsReport):
    """Mostra as cinco métricas, o tempo e a matriz de confusão."""
    print(f"\n{Fore.CYAN}{'='*60}{Style.RESET_ALL}")
    for name in ("accuracy", "precision", "recall", "f1", "roc_auc"):
        print(f"  {Fore.WHITE}{name:<10}{Style.RESET_ALL} {getattr(report, name):.8f}")
    print(f"  {Fore.WHITE}{'tempo (s)':<10}{Style.RESET_ALL} {report.pred_time_s:.4f}")
    m = report.matrix
    print(f"  {Fore.GREEN}TP={m.tp}{Style.RESET_ALL}  {Fore.RED}FP={m.fp}{Style.RESET_ALL}  "
          f"{Fore.RED}FN={m.fn}{Style.RESET_ALL}  {Fore.GREEN}TN={m.tn}{Style.RESET_ALL}")
    if report.degenerate_flags:
        print(f"  {Fore.YELLOW}[AVISO]{Style.RESET_ALL} {', '.join(sorted(report.degenerate_flags))}")
    print(f"{Fore.CYAN}{'='*60}{Style.RESET_ALL}")


def _require_input(cfg: RunConfig) -> Path:
    if not cfg.input:
        raise ConfigError("--input é obrigatório para este comando")
    path = Path(cfg.input)
    if not path.is_file():
        raise FileNotFoundError(f"Arquivo de entrada não encontrado: {path}")
    return path


def cmd_synth(cfg: RunConfig, pipeline: SynDetectionPipeline) -> Path:
    synth = cfg.synth_config()
    synth.validate()
    path = Path(cfg.output_dir) / "synthetic_flows.csv"
    dataset = pipeline.synthesize(synth, path)
    benign, attack = dataset.class_counts()
    _success(f"{dataset.n_rows} linhas gravadas em {path} (ataque: {attack}, benigno: {benign})")
    return path


def cmd_prepare(cfg: RunConfig, pipeline: SynDetectionPipeline) -> Path:
    input_path = _require_input(cfg)
    dataset, stats = pipeline.prepare(input_path, cfg.clean_policy(),
                                      has_header=not cfg.no_header)
    out = Path(cfg.output_dir)
    cleaned = write_dataset_csv(dataset, out / "cleaned_flows.csv", cfg.label_column)
    _write_json(stats.to_dict(), out / "clean_stats.json")
    _success(f"{stats.rows_out} de {stats.rows_in} linhas mantidas -> {cleaned}")
    _info(f"Não finitas removidas: {stats.nonfinite_dropped}, "
          f"duplicadas removidas: {stats.duplicates_dropped}")
    return cleaned


def cmd_tune(cfg: RunConfig, pipeline: SynDetectionPipeline) -> Path:
    input_path = _require_input(cfg)
    grid = cfg.grid_spec()
    cv = cfg.cv_config()
    dataset, _ = pipeline.prepare(input_path, cfg.clean_policy(), cfg.subsample, cfg.seed,
                                  has_header=not cfg.no_header)
    _info(f"{grid.size} combinações x {cv.n_splits} folds sobre {dataset.n_rows} linhas "
          f"(padronização: {cfg.scaling_mode})")
    result = pipeline.tune(dataset, grid, cv, cfg.seed, cfg.scaling_mode, progress=_progress)

    out = Path(cfg.output_dir)
    path = _write_json(result.to_dict(), out / "tune_result.json")
    _write_table(result.to_csv_rows(), out / "tune_results.csv", CSV_COLUMNS)
    _write_table(result.fold_csv_rows(), out / "tune_folds.csv")
    _write_table(result.feature_mode_series(), out / "tune_by_feature_mode.csv")
    _write_json(result.best.to_dict(), out / "best_hyperparams.json")

    best = result.best
    _success(f"Melhor: {best.n_estimators} estimadores, profundidade {best.max_depth}, "
             f"atributos {best.feature_mode.value} "
             f"(acc={result.best_accuracy:.6f}, tempo={result.best_pred_time:.4f}s)")
    return path


def _validation_text(cfg: RunConfig) -> str:
    holdout = f"holdout estratificado {cfg.test_fraction:.0%}"
    if cfg.hyperparams_from:
        return f"K-fold estratificado (K={cfg.folds}) + {holdout}"
    return holdout


def cmd_train(cfg: RunConfig, pipeline: SynDetectionPipeline) -> Path:
    input_path = _require_input(cfg)
    if cfg.hyperparams_from:
        hyperparams = load_hyperparams(cfg.hyperparams_from, cfg.seed)
    else:
        hyperparams = cfg.hyperparams()
    dataset, _ = pipeline.prepare(input_path, cfg.clean_policy(), cfg.subsample, cfg.seed,
                                  has_header=not cfg.no_header)

    out = Path(cfg.output_dir)
    model_path = Path(cfg.model) if cfg.model else out / "model.bin"
    _, report, sizes = pipeline.train(dataset, hyperparams, cfg.scaling_mode,
                                      cfg.test_fraction, cfg.seed, model_path)
    summary = method_summary(hyperparams, report, _validation_text(cfg))
    _write_table([summary], out / "method_summary.csv", SUMMARY_COLUMNS)
    _write_json({
        'summary': summary,
        'hyperparams': hyperparams.to_dict(),
        'scaling_mode': cfg.scaling_mode,
        'test_fraction': cfg.test_fraction,
        'n_train': sizes['n_train'],
        'n_test': sizes['n_test'],
        'metrics': report.to_dict(),
    }, out / "train_report.json")
    imprimir_metricas(report)
    _success(f"Modelo gravado em {model_path}")
    return model_path


def cmd_predict(cfg: RunConfig, pipeline: SynDetectionPipeline) -> Path:
    input_path = _require_input(cfg)
    out = Path(cfg.output_dir)
    model_path = Path(cfg.model) if cfg.model else out / "model.bin"
    if not model_path.is_file():
        raise FileNotFoundError(f"Modelo não encontrado: {model_path}")

    result = pipeline.predict(model_path, input_path, cfg.clean_policy(),
                              has_header=not cfg.no_header)
    path = out / "predictions.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({
        'row': np.arange(result.rows),
        'label': result.labels,
        'score': result.scores,
    }).to_csv(path, index=False, lineterminator="\n")
    summary = result.timing_summary()
    _write_json(summary, out / "timing_summary.json")
    rate = summary['rows_per_second']
    rate_text = f"{rate:.0f} linhas/s" if rate is not None else "tempo abaixo da resolução"
    _success(f"{summary['rows']} linhas em {summary['seconds']:.4f}s ({rate_text}) -> {path}")
    if result.report is not None:
        imprimir_metricas(result.report)
    return path


HANDLERS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "tune": cmd_tune,
    "train": cmd_train,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    """Flags não informadas ficam fora do Namespace (argparse.SUPPRESS)."""
    shared = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    shared.add_argument("--config", help="Arquivo JSON com os mesmos parâmetros das flags")
    shared.add_argument("--input", help="CSV de entrada")
    shared.add_argument("--output-dir", help="Diretório de saída (padrão: output)")
    shared.add_argument("--label-column", help="Coluna de rótulo (padrão: Label)")
    shared.add_argument("--no-header", action="store_true",
                        help="CSV sem cabeçalho: colunas viram col_0..col_{k-1}")
    shared.add_argument("--seed", type=int, help="Semente (padrão: 42)")
    shared.add_argument("--folds", type=int, help="Número de folds (padrão: 5)")
    shared.add_argument("--scaling-mode", choices=["paper", "strict"],
                        help="paper: scaler no dataset inteiro; strict: só no treino")
    shared.add_argument("--grid-estimators", help="Lista, ex.: 10,20,50,100")
    shared.add_argument("--grid-depths", help="Lista, ex.: 5,10,15,20")
    shared.add_argument("--grid-features", help="Lista de sqrt, log2, all")
    shared.add_argument("--n-estimators", type=int, help="Árvores do modelo final (padrão: 20)")
    shared.add_argument("--max-depth", type=int, help="Profundidade do modelo final (padrão: 10)")
    shared.add_argument("--feature-mode", choices=["sqrt", "log2", "all"],
                        help="Modo de atributos do modelo final (padrão: all)")
    shared.add_argument("--threads", type=int, help="Paralelismo máximo (padrão: 1)")
    shared.add_argument("--debug", action="store_true", help="Logs detalhados")
    shared.add_argument("--log-file", help="Arquivo para logs estruturados")
    shared.add_argument("--subsample", type=float, help="Fração estratificada a usar")
    shared.add_argument("--model", help="Arquivo do modelo (padrão: <output-dir>/model.bin)")

    parser = argparse.ArgumentParser(
        prog="detector_syn",
        description="Detecção de ataques SYN DoS com Random Forest ajustado",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[shared], help="Gera CSV sintético",
                           argument_default=argparse.SUPPRESS)
    synth.add_argument("--rows", type=int)
    synth.add_argument("--attack-fraction", type=float)
    synth.add_argument("--n-features", type=int)
    synth.add_argument("--class-separation", type=float)
    synth.add_argument("--noise-std", type=float)

    prepare = sub.add_parser("prepare", parents=[shared], help="Limpa um CSV de fluxos",
                             argument_default=argparse.SUPPRESS)
    prepare.add_argument("--keep-duplicates", action="store_true")
    prepare.add_argument("--keep-nonfinite", action="store_true")
    prepare.add_argument("--exclude-columns", help="Colunas a excluir, separadas por vírgula")
    prepare.add_argument("--positive-labels", help="Rótulos de ataque, separados por vírgula")

    sub.add_parser("tune", parents=[shared], help="Grid search com validação cruzada",
                   argument_default=argparse.SUPPRESS)

    train = sub.add_parser("train", parents=[shared], help="Treina e avalia o modelo final",
                           argument_default=argparse.SUPPRESS)
    train.add_argument("--test-fraction", type=float)
    train.add_argument("--hyperparams-from", help="best_hyperparams.json ou tune_result.json")

    sub.add_parser("predict", parents=[shared], help="Classifica um CSV em lote",
                   argument_default=argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Função principal; retorna o código de saída (0, 1 ou 2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse: 0 para --help, 2 para uso inválido
        return int(e.code or 0)

    flags = {key.replace("-", "_"): value for key, value in vars(args).items()}
    try:
        cfg = RunConfig.from_sources(flags)
        pipeline = SynDetectionPipeline(n_jobs=cfg.threads, log_file=cfg.log_file,
                                        debug=cfg.debug)
        HANDLERS[cfg.command](cfg, pipeline)
    except Exception as e:
        _error(str(e))
        return exit_code_for(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

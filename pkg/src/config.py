"""
Configuração de execução

Três camadas, da menor para a maior precedência: valores padrão, arquivo JSON
(--config, chaves iguais às flags longas com '_') e flags explícitas.
"""

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

try:
    from .crossval import CrossValConfig
    from .errors import ConfigError
    from .flowdata import (CleanPolicy, DEFAULT_EXCLUDED_COLUMNS, DEFAULT_LABEL_COLUMN,
                           SCALING_MODES)
    from .forest import FeatureMode, ForestHyperparams
    from .synthgen import SynthConfig
    from .tuner import DEFAULT_DEPTHS, DEFAULT_ESTIMATORS, DEFAULT_FEATURES, GridSpec
except ImportError:
    from crossval import CrossValConfig
    from errors import ConfigError
    from flowdata import (CleanPolicy, DEFAULT_EXCLUDED_COLUMNS, DEFAULT_LABEL_COLUMN,
                          SCALING_MODES)
    from forest import FeatureMode, ForestHyperparams
    from synthgen import SynthConfig
    from tuner import DEFAULT_DEPTHS, DEFAULT_ESTIMATORS, DEFAULT_FEATURES, GridSpec


logger = logging.getLogger(__name__)


def _split(value: Any) -> List[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (list, tuple)):
        return [str(part).strip() for part in value]
    raise ConfigError(f"Lista inválida: {value!r}")


def parse_int_list(value: Any) -> List[int]:
    """'10,20,50' ou [10, 20, 50] -> [10, 20, 50]"""
    try:
        return [int(part) for part in _split(value)]
    except ValueError:
        raise ConfigError(f"Lista de inteiros inválida: {value!r}")


def parse_str_list(value: Any) -> List[str]:
    return _split(value)


@dataclass
class RunConfig:
    """Todos os parâmetros do CLI."""
    command: Optional[str] = None
    config: Optional[str] = None
    input: Optional[str] = None
    output_dir: str = "output"
    label_column: str = DEFAULT_LABEL_COLUMN
    no_header: bool = False
    seed: int = 42
    folds: int = 5
    scaling_mode: str = "paper"
    grid_estimators: List[int] = field(default_factory=lambda: list(DEFAULT_ESTIMATORS))
    grid_depths: List[int] = field(default_factory=lambda: list(DEFAULT_DEPTHS))
    grid_features: List[str] = field(default_factory=lambda: [f.value for f in DEFAULT_FEATURES])
    n_estimators: int = 20
    max_depth: int = 10
    feature_mode: str = "all"
    threads: int = 1
    debug: bool = False
    log_file: Optional[str] = None

    # synth
    rows: int = 1000
    attack_fraction: float = 0.5
    n_features: int = 82
    class_separation: float = 4.0
    noise_std: float = 1.0

    # prepare
    keep_duplicates: bool = False
    keep_nonfinite: bool = False
    exclude_columns: Optional[List[str]] = None
    positive_labels: Optional[List[str]] = None

    # tune / train / predict
    subsample: Optional[float] = None
    test_fraction: float = 0.2
    hyperparams_from: Optional[str] = None
    model: Optional[str] = None

    def __post_init__(self):
        self.grid_estimators = parse_int_list(self.grid_estimators)
        self.grid_depths = parse_int_list(self.grid_depths)
        self.grid_features = parse_str_list(self.grid_features)
        if self.exclude_columns is not None:
            self.exclude_columns = parse_str_list(self.exclude_columns)
        if self.positive_labels is not None:
            self.positive_labels = parse_str_list(self.positive_labels)
        if self.scaling_mode not in SCALING_MODES:
            raise ConfigError(
                f"scaling_mode inválido: '{self.scaling_mode}' (use paper ou strict)"
            )
        if self.threads == 0 or self.threads < -1:
            raise ConfigError("threads deve ser >= 1 (ou -1 para todos os núcleos)")
        if self.subsample is not None and not 0.0 < self.subsample <= 1.0:
            raise ConfigError(f"subsample deve estar em (0, 1], recebido {self.subsample}")

    @classmethod
    def from_sources(cls, flags: Dict[str, Any]) -> "RunConfig":
        """
        Mescla padrão < arquivo JSON < flags.

        Args:
            flags: Somente as flags informadas explicitamente
        """
        known = {f.name for f in fields(cls)}
        values: Dict[str, Any] = {}

        config_path = flags.get('config')
        if config_path:
            path = Path(config_path)
            if not path.is_file():
                raise ConfigError(f"Arquivo de configuração não encontrado: {path}")
            try:
                data = json.loads(path.read_text(encoding='utf-8'))
            except json.JSONDecodeError as e:
                raise ConfigError(f"JSON inválido em {path}: {e}")
            if not isinstance(data, dict):
                raise ConfigError(f"{path} deve conter um objeto JSON")
            unknown = sorted(set(data) - known)
            if unknown:
                raise ConfigError(f"Chaves desconhecidas em {path}: {', '.join(unknown)}")
            values.update(data)
            logger.debug(f"Configuração carregada de {path}: {sorted(data)}")

        unknown = sorted(set(flags) - known)
        if unknown:
            raise ConfigError(f"Parâmetros desconhecidos: {', '.join(unknown)}")
        values.update(flags)
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"Configuração inválida: {e}")

    def with_overrides(self, **overrides) -> "RunConfig":
        return replace(self, **overrides)

    def clean_policy(self) -> CleanPolicy:
        excluded = (frozenset(self.exclude_columns) if self.exclude_columns is not None
                    else DEFAULT_EXCLUDED_COLUMNS)
        positive = frozenset(self.positive_labels) if self.positive_labels else None
        return CleanPolicy(
            drop_nonfinite=not self.keep_nonfinite,
            drop_duplicate_rows=not self.keep_duplicates,
            positive_label_names=positive,
            excluded_columns=excluded,
            label_column=self.label_column,
        )

    def cv_config(self) -> CrossValConfig:
        return CrossValConfig(n_splits=int(self.folds), shuffle=True, random_state=int(self.seed))

    def grid_spec(self) -> GridSpec:
        return GridSpec(tuple(self.grid_estimators), tuple(self.grid_depths),
                        tuple(FeatureMode.parse(f) for f in self.grid_features))

    def hyperparams(self) -> ForestHyperparams:
        return ForestHyperparams(
            n_estimators=int(self.n_estimators),
            max_depth=int(self.max_depth),
            feature_mode=FeatureMode.parse(self.feature_mode),
            seed=int(self.seed),
        )

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_rows=int(self.rows),
            attack_fraction=float(self.attack_fraction),
            n_features=int(self.n_features),
            class_separation=float(self.class_separation),
            noise_std=float(self.noise_std),
            seed=int(self.seed),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_hyperparams(path: str, seed: Optional[int] = None) -> ForestHyperparams:
    """Lê best_hyperparams.json ou tune_result.json (chave 'best')."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Arquivo de hiperparâmetros não encontrado: {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido em {path}: {e}")
    if isinstance(data, dict) and 'best' in data:
        data = data['best']
    try:
        hyperparams = ForestHyperparams.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Hiperparâmetros inválidos em {path}: {e}")
    return hyperparams.with_seed(seed) if seed is not None else hyperparams

"""
Módulo de Dados de Fluxo - Estágio 1 do Pipeline

Carrega registros de fluxo (CSV no formato CICFlowMeter / CIC-DDoS2019),
limpa e converte tipos, codifica rótulos (BENIGN = 0, ataque = 1) e aplica
padronização (StandardScaler com desvio populacional).
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

try:
    from .errors import ConfigError, DataFormatError
except ImportError:
    from errors import ConfigError, DataFormatError


logger = logging.getLogger(__name__)

DEFAULT_LABEL_COLUMN = "Label"

# Colunas identificadoras do CIC-DDoS2019 (88 -> 82 atributos)
DEFAULT_EXCLUDED_COLUMNS = frozenset({
    "Unnamed: 0",
    "Flow ID",
    "Source IP",
    "Destination IP",
    "Timestamp",
    "SimillarHTTP",
})

SCALING_MODES = ("paper", "strict")


@dataclass
class RawTable:
    """Tabela textual, exatamente como lida do CSV."""
    header: List[str]
    rows: List[List[str]]
    source_path: str = ""

    def __post_init__(self):
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataFormatError(
                    f"Linha {i} tem {len(row)} células, esperado {width}",
                    row_index=i,
                )


@dataclass
class Dataset:
    """Matriz de atributos X, rótulos binários y e nomes das colunas."""
    X: np.ndarray
    y: np.ndarray
    feature_names: List[str]
    # Texto original do rótulo (preservado para reescrever o CSV limpo)
    source_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DataFormatError("X deve ser uma matriz 2D")
        n_rows, n_features = self.X.shape
        if n_rows < 1 or n_features < 1:
            raise DataFormatError(
                f"Dataset vazio: {n_rows} linha(s), {n_features} atributo(s)"
            )
        if self.y.shape != (n_rows,):
            raise DataFormatError(
                f"y tem {self.y.shape[0]} rótulos para {n_rows} linhas"
            )
        if len(self.feature_names) != n_features:
            raise DataFormatError(
                f"{len(self.feature_names)} nomes para {n_features} atributos"
            )
        if not np.isfinite(self.X).all():
            raise DataFormatError("X contém valores não finitos")
        if not np.isin(self.y, (0, 1)).all():
            raise DataFormatError("y deve conter apenas 0 (benigno) e 1 (ataque)")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def class_counts(self) -> Tuple[int, int]:
        counts = np.bincount(self.y, minlength=2)
        return int(counts[0]), int(counts[1])

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        labels = None if self.source_labels is None else self.source_labels[indices]
        return Dataset(self.X[indices], self.y[indices],
                       list(self.feature_names), labels)


@dataclass
class ScalerParams:
    """Médias e desvios-padrão populacionais por coluna."""
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.stds = np.asarray(self.stds, dtype=np.float64)
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise DataFormatError("means e stds devem ser vetores do mesmo tamanho")
        if (self.stds < 0).any():
            raise DataFormatError("stds não podem ser negativos")

    @property
    def n_features(self) -> int:
        return self.means.shape[0]

    def to_dict(self) -> Dict:
        return {'means': self.means.tolist(), 'stds': self.stds.tolist()}


@dataclass
class CleanPolicy:
    """Política de limpeza (conversões e eliminação de redundâncias)."""
    drop_nonfinite: bool = True
    drop_duplicate_rows: bool = True
    # None = todo rótulo fora de negative_label_names é ataque
    positive_label_names: Optional[FrozenSet[str]] = None
    negative_label_names: FrozenSet[str] = frozenset({"BENIGN"})
    excluded_columns: FrozenSet[str] = DEFAULT_EXCLUDED_COLUMNS
    label_column: str = DEFAULT_LABEL_COLUMN

    def encode_label(self, text: str) -> Optional[int]:
        """Retorna 0/1, ou None quando o rótulo não é coberto pelo mapeamento."""
        key = text.strip().upper()
        if key in {n.strip().upper() for n in self.negative_label_names}:
            return 0
        if self.positive_label_names is None:
            return 1
        if key in {n.strip().upper() for n in self.positive_label_names}:
            return 1
        return None


@dataclass
class CleanStats:
    """Contagem de linhas descartadas por motivo."""
    rows_in: int = 0
    rows_out: int = 0
    nonfinite_dropped: int = 0
    duplicates_dropped: int = 0
    columns_excluded: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'rows_in': self.rows_in,
            'rows_out': self.rows_out,
            'nonfinite_dropped': self.nonfinite_dropped,
            'duplicates_dropped': self.duplicates_dropped,
            'columns_excluded': list(self.columns_excluded),
        }


def load_csv(path: str, has_header: bool = True) -> RawTable:
    """
    Lê um CSV (UTF-8, vírgula) sem interpretar valores.

    Args:
        path: Caminho do arquivo
        has_header: Se False, o cabeçalho é sintetizado como col_0..col_{k-1}

    Returns:
        RawTable com todas as linhas de dados
    """
    path = str(path)
    content = Path(path).read_bytes()
    try:
        text = content.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line = content.count(b"\n", 0, e.start) + 1
        raise DataFormatError(
            f"{path}: linha {line} não é UTF-8 válido (byte {e.start})",
            row_index=line - 1,
        ) from e

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        lines = [row for row in reader if row]
    except csv.Error as e:
        raise DataFormatError(f"{path}: CSV malformado na linha {reader.line_num}: {e}",
                              row_index=reader.line_num - 1) from e

    if has_header and lines:
        header, data = lines[0], lines[1:]
    else:
        header = [f"col_{j}" for j in range(len(lines[0]))] if lines else []
        data = lines

    if not data:
        raise DataFormatError(f"Arquivo sem linhas de dados (no rows): {path}")

    table = RawTable(header=list(header), rows=data, source_path=path)
    logger.debug(f"{path}: {len(data)} linhas, {len(header)} colunas")
    return table


def _unique_names(names: Sequence[str]) -> List[str]:
    """Remove espaços e desambigua nomes repetidos (col, col.1, ...)."""
    seen: Dict[str, int] = {}
    result = []
    for name in names:
        base = name.strip()
        if base in seen:
            seen[base] += 1
            result.append(f"{base}.{seen[base]}")
        else:
            seen[base] = 0
            result.append(base)
    return result


def _frame(raw: RawTable, policy: CleanPolicy) -> Tuple[pd.DataFrame, Optional[str], List[str], List[str]]:
    header = _unique_names(raw.header)
    frame = pd.DataFrame(raw.rows, columns=header, dtype=str)
    label = policy.label_column.strip()
    label_col = label if label in header else None
    excluded_set = {c.strip() for c in policy.excluded_columns}
    excluded = [c for c in header if c in excluded_set and c != label_col]
    features = [c for c in header if c != label_col and c not in excluded]
    return frame, label_col, excluded, features


def _to_float(column: pd.Series) -> pd.Series:
    stripped = column.str.strip()
    try:
        return stripped.astype(np.float64)
    except ValueError:
        # células não numéricas viram NaN e são tratadas como não finitas
        return pd.to_numeric(stripped, errors="coerce")


def _numeric(frame: pd.DataFrame, columns: List[str]) -> np.ndarray:
    converted = frame[columns].apply(_to_float)
    return converted.to_numpy(dtype=np.float64)


def _first_nonfinite(values: np.ndarray, columns: List[str]) -> Tuple[int, str]:
    rows, cols = np.nonzero(~np.isfinite(values))
    return int(rows[0]), columns[int(cols[0])]


def _encode_labels(labels: np.ndarray, policy: CleanPolicy) -> np.ndarray:
    y = np.empty(labels.shape[0], dtype=np.int64)
    cache: Dict[str, Optional[int]] = {}
    for i, text in enumerate(labels):
        if text not in cache:
            cache[text] = policy.encode_label(text)
        code = cache[text]
        if code is None:
            raise DataFormatError(
                f"Rótulo '{text.strip()}' (linha {i}) não coberto pelo mapeamento",
                row_index=i, column=policy.label_column,
            )
        y[i] = code
    return y


def clean(raw: RawTable, policy: Optional[CleanPolicy] = None) -> Tuple[Dataset, CleanStats]:
    """
    Remove colunas identificadoras, converte para numérico, descarta linhas
    não finitas e duplicadas e codifica os rótulos.

    Returns:
        (Dataset, CleanStats)
    """
    policy = policy or CleanPolicy()
    frame, label_col, excluded, features = _frame(raw, policy)

    if label_col is None:
        raise DataFormatError(
            f"Coluna de rótulo '{policy.label_column.strip()}' não encontrada",
            column=policy.label_column.strip(),
        )
    if not features:
        raise DataFormatError("Nenhuma coluna de atributo após a exclusão")

    stats = CleanStats(rows_in=len(raw.rows), columns_excluded=excluded)
    labels = frame[label_col].str.strip().to_numpy(dtype=object)
    y = _encode_labels(labels, policy)
    values = _numeric(frame, features)

    finite = np.isfinite(values).all(axis=1)
    if not finite.all():
        if not policy.drop_nonfinite:
            row, column = _first_nonfinite(values, features)
            raise DataFormatError(
                f"Valor não finito ou inválido na linha {row}, coluna '{column}'",
                row_index=row, column=column,
            )
        stats.nonfinite_dropped = int((~finite).sum())
    keep = finite

    if policy.drop_duplicate_rows:
        candidate = pd.DataFrame(values[keep])
        candidate["__label__"] = labels[keep]
        duplicated = candidate.duplicated(keep="first").to_numpy()
        stats.duplicates_dropped = int(duplicated.sum())
        kept_positions = np.flatnonzero(keep)
        keep = keep.copy()
        keep[kept_positions[duplicated]] = False

    stats.rows_out = int(keep.sum())
    if stats.rows_out == 0:
        raise DataFormatError("Todas as linhas foram descartadas na limpeza")

    dataset = Dataset(values[keep], y[keep], features, labels[keep])
    logger.info(
        f"Limpeza: {stats.rows_in} -> {stats.rows_out} linhas "
        f"(não finitas: {stats.nonfinite_dropped}, duplicadas: {stats.duplicates_dropped})"
    )
    return dataset, stats


def feature_matrix(raw: RawTable,
                   policy: Optional[CleanPolicy] = None) -> Tuple[np.ndarray, List[str], Optional[np.ndarray]]:
    """
    Conversão usada na predição: rótulo opcional, nenhuma linha descartada.

    Returns:
        (X, nomes das colunas, y ou None se o CSV não tem rótulo)
    """
    policy = policy or CleanPolicy()
    frame, label_col, _, features = _frame(raw, policy)
    if not features:
        raise DataFormatError("Nenhuma coluna de atributo após a exclusão")
    values = _numeric(frame, features)
    if not np.isfinite(values).all():
        row, column = _first_nonfinite(values, features)
        raise DataFormatError(
            f"Valor não finito ou inválido na linha {row}, coluna '{column}'",
            row_index=row, column=column,
        )
    y = None
    if label_col is not None:
        y = _encode_labels(frame[label_col].str.strip().to_numpy(dtype=object), policy)
    return values, features, y


def load_dataset(path: str, policy: Optional[CleanPolicy] = None,
                 has_header: bool = True) -> Tuple[Dataset, CleanStats]:
    return clean(load_csv(path, has_header), policy)


def fit_scaler(X: np.ndarray) -> ScalerParams:
    """Ajusta médias e desvios populacionais (divisão por n)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DataFormatError("fit_scaler requer uma matriz não vazia")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[np.ptp(X, axis=0) == 0] = 0.0
    return ScalerParams(means, stds)


def apply_scaler(X: np.ndarray, params: ScalerParams) -> np.ndarray:
    """(X - média) / desvio; colunas de desvio zero viram 0."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise DataFormatError(
            f"Dimensão incompatível: X tem {X.shape[-1]} colunas, "
            f"scaler tem {params.n_features}"
        )
    constant = params.stds == 0
    out = (X - params.means) / np.where(constant, 1.0, params.stds)
    out[:, constant] = 0.0
    return out


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def train_test_split(dataset: Dataset, test_fraction: float = 0.2,
                     seed: int = 42) -> Tuple[Dataset, Dataset]:
    """
    Divisão estratificada treino/teste.

    Cada classe contribui round(contagem x test_fraction) linhas ao teste,
    limitado a [1, contagem - 1].
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction deve estar em (0, 1), recebido {test_fraction}")

    rng = np.random.default_rng(seed)
    test_parts = []
    for label in (0, 1):
        members = np.flatnonzero(dataset.y == label)
        if members.shape[0] < 2:
            raise DataFormatError(
                f"Classe {label} tem {members.shape[0]} linha(s); "
                "a divisão estratificada exige ao menos 2"
            )
        n_test = min(max(_round_half_up(members.shape[0] * test_fraction), 1),
                     members.shape[0] - 1)
        test_parts.append(rng.permutation(members)[:n_test])

    test_idx = np.sort(np.concatenate(test_parts))
    train_mask = np.ones(dataset.n_rows, dtype=bool)
    train_mask[test_idx] = False
    return dataset.subset(np.flatnonzero(train_mask)), dataset.subset(test_idx)


def stratified_subsample(dataset: Dataset, fraction: float, seed: int = 42) -> Dataset:
    """Subamostra estratificada (ex.: 1% de um dia do CIC-DDoS2019)."""
    return train_test_split(dataset, fraction, seed)[1]


def write_dataset_csv(dataset: Dataset, path: str,
                      label_column: str = DEFAULT_LABEL_COLUMN,
                      label_names: Tuple[str, str] = ("BENIGN", "Syn")) -> Path:
    """Escreve no mesmo dialeto que load_csv lê (cabeçalho + coluna de rótulo)."""
    if dataset.source_labels is not None:
        labels = dataset.source_labels
    else:
        labels = np.where(dataset.y == 1, label_names[1], label_names[0])
    frame = pd.DataFrame(dataset.X, columns=dataset.feature_names)
    frame[label_column] = labels
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path

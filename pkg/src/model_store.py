"""
Persistência do modelo - formato binário versionado

Layout (little-endian):

    magic         8 bytes  b"SYNRFMDL"
    version       u32      (= 2; 1 ainda é lido)
    n_estimators  u32
    max_depth     u32
    feature_mode  u8       0 = sqrt, 1 = log2, 2 = all
    seed          i64
    min_samples   u32
    n_features    u32
    scaling_mode  u8       0 = nenhum, 1 = paper, 2 = strict
    has_scaler    u8
    por árvore:
        n_nodes   u32
        feature   i32[n]   (-1 = folha)
        threshold f64[n]
        left      i32[n]
        right     i32[n]
        count0    i64[n]
        count1    i64[n]
    se has_scaler:
        means     f64[n_features]
        stds      f64[n_features]
    has_names     u8       (só na versão 2)
    se has_names, por atributo:
        length    u16
        name      utf-8[length]
    crc32         u32      de todos os bytes anteriores

Os nós estão em pré-ordem: filhos sempre têm índice maior que o pai.
"""

import logging
import os
import struct
import zlib
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

try:
    from .errors import ModelFormatError
    from .flowdata import ScalerParams
    from .forest import FeatureMode, FlatTree, ForestHyperparams, ForestModel
except ImportError:
    from errors import ModelFormatError
    from flowdata import ScalerParams
    from forest import FeatureMode, FlatTree, ForestHyperparams, ForestModel


logger = logging.getLogger(__name__)

MAGIC = b"SYNRFMDL"
FORMAT_VERSION = 2
SUPPORTED_VERSIONS = (1, 2)

_PREAMBLE = struct.Struct("<8sI")
_HEADER = struct.Struct("<IIBqIIBB")
_COUNT = struct.Struct("<I")
_NAME_LENGTH = struct.Struct("<H")

_FEATURE_MODES = [FeatureMode.SQRT, FeatureMode.LOG2, FeatureMode.ALL]
_SCALING_MODES = [None, "paper", "strict"]

# (nome do array, dtype no arquivo)
_NODE_ARRAYS = [
    ("feature", "<i4"),
    ("threshold", "<f8"),
    ("left", "<i4"),
    ("right", "<i4"),
    ("count0", "<i8"),
    ("count1", "<i8"),
]


def _encode_names(names: Optional[List[str]]) -> bytes:
    if names is None:
        return b"\x00"
    parts = [b"\x01"]
    for name in names:
        raw = str(name).encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ModelFormatError(f"Nome de atributo longo demais: {name[:40]}...")
        parts.append(_NAME_LENGTH.pack(len(raw)))
        parts.append(raw)
    return b"".join(parts)


def _decode_names(reader: "_Reader", n_features: int) -> Optional[List[str]]:
    (has_names,) = reader.take(1)
    if has_names == 0:
        return None
    if has_names != 1:
        raise ModelFormatError("Bloco de nomes de atributos inválido")
    names = []
    for _ in range(n_features):
        (length,) = reader.unpack(_NAME_LENGTH)
        try:
            names.append(reader.take(length).decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFormatError("Nome de atributo não é UTF-8 válido")
    return names


def _encode(model: ForestModel) -> bytes:
    hp = model.hyperparams
    has_scaler = model.scaler is not None
    parts: List[bytes] = [
        _PREAMBLE.pack(MAGIC, FORMAT_VERSION),
        _HEADER.pack(
            hp.n_estimators, hp.max_depth, _FEATURE_MODES.index(hp.feature_mode),
            hp.seed, hp.min_samples_split, model.n_features_trained,
            _SCALING_MODES.index(model.scaling_mode), int(has_scaler),
        ),
    ]
    for tree in model.trees:
        parts.append(_COUNT.pack(tree.n_nodes))
        for name, dtype in _NODE_ARRAYS:
            parts.append(np.asarray(getattr(tree, name)).astype(dtype).tobytes())
    if has_scaler:
        parts.append(model.scaler.means.astype("<f8").tobytes())
        parts.append(model.scaler.stds.astype("<f8").tobytes())
    parts.append(_encode_names(model.feature_names))
    body = b"".join(parts)
    return body + _COUNT.pack(zlib.crc32(body) & 0xFFFFFFFF)


def save_model(model: ForestModel, path: str) -> Path:
    """Grava o modelo; o arquivo final só aparece depois de escrito por completo."""
    if model.scaling_mode not in _SCALING_MODES:
        raise ModelFormatError(f"Modo de padronização desconhecido: {model.scaling_mode}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp = path.with_name(path.name + ".tmp")
    temp.write_bytes(_encode(model))
    os.replace(temp, path)
    logger.info(f"Modelo salvo em {path} ({path.stat().st_size} bytes)")
    return path


class _Reader:
    def __init__(self, data: bytes, end: int):
        self.data = data
        self.pos = 0
        self.end = end

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > self.end:
            raise ModelFormatError("Arquivo de modelo truncado")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, layout: struct.Struct) -> Tuple:
        return layout.unpack(self.take(layout.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(size), dtype=dtype).astype(dtype[1:])


def _validate_tree(tree: FlatTree, n_features: int, index: int):
    n = tree.n_nodes
    positions = np.arange(n)
    leaf = tree.feature < 0
    if (tree.feature >= n_features).any() or (tree.feature < -1).any():
        raise ModelFormatError(f"Árvore {index}: índice de atributo inválido")
    if (leaf & ((tree.left != -1) | (tree.right != -1))).any():
        raise ModelFormatError(f"Árvore {index}: folha com filhos")
    internal = ~leaf
    if ((tree.left[internal] <= positions[internal]) | (tree.left[internal] >= n)
            | (tree.right[internal] <= positions[internal]) | (tree.right[internal] >= n)).any():
        raise ModelFormatError(f"Árvore {index}: referência de nó inválida")
    if (tree.count0 < 0).any() or (tree.count1 < 0).any():
        raise ModelFormatError(f"Árvore {index}: contagem negativa")
    if (tree.count0[leaf] + tree.count1[leaf] < 1).any():
        raise ModelFormatError(f"Árvore {index}: folha vazia")
    if not np.isfinite(tree.threshold).all():
        raise ModelFormatError(f"Árvore {index}: limiar não finito")


def load_model(path: str) -> ForestModel:
    """
    Lê um modelo gravado por save_model.

    Raises:
        ModelFormatError: magic incorreto, versão incompatível, arquivo
            truncado, CRC divergente ou estrutura inválida
    """
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size or data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path} não é um arquivo de modelo")
    _, version = _PREAMBLE.unpack_from(data, 0)
    if version not in SUPPORTED_VERSIONS:
        raise ModelFormatError(
            f"Versão de modelo {version} incompatível (suportadas: "
            f"{', '.join(map(str, SUPPORTED_VERSIONS))})"
        )
    if len(data) < _PREAMBLE.size + _HEADER.size + _COUNT.size:
        raise ModelFormatError("Arquivo de modelo truncado")
    (stored_crc,) = _COUNT.unpack_from(data, len(data) - _COUNT.size)
    if zlib.crc32(data[:-_COUNT.size]) & 0xFFFFFFFF != stored_crc:
        raise ModelFormatError("Arquivo de modelo truncado ou corrompido (CRC divergente)")

    reader = _Reader(data, len(data) - _COUNT.size)
    reader.take(_PREAMBLE.size)
    (n_estimators, max_depth, mode_code, seed, min_samples, n_features,
     scaling_code, has_scaler) = reader.unpack(_HEADER)
    if mode_code >= len(_FEATURE_MODES) or scaling_code >= len(_SCALING_MODES) or has_scaler > 1:
        raise ModelFormatError("Cabeçalho de modelo inválido")

    try:
        hyperparams = ForestHyperparams(
            n_estimators=n_estimators, max_depth=max_depth,
            feature_mode=_FEATURE_MODES[mode_code], seed=seed,
            min_samples_split=min_samples,
        )
    except ValueError as e:
        raise ModelFormatError(f"Hiperparâmetros inválidos no modelo: {e}")

    trees = []
    for index in range(n_estimators):
        (n_nodes,) = reader.unpack(_COUNT)
        if n_nodes < 1:
            raise ModelFormatError(f"Árvore {index} sem nós")
        arrays = {name: reader.array(dtype, n_nodes) for name, dtype in _NODE_ARRAYS}
        tree = FlatTree(**arrays)
        _validate_tree(tree, n_features, index)
        trees.append(tree)

    scaler = None
    if has_scaler:
        means = reader.array("<f8", n_features)
        stds = reader.array("<f8", n_features)
        if (stds < 0).any() or not (np.isfinite(means).all() and np.isfinite(stds).all()):
            raise ModelFormatError("Parâmetros de padronização inválidos")
        scaler = ScalerParams(means, stds)

    feature_names = _decode_names(reader, n_features) if version >= 2 else None

    if reader.pos != reader.end:
        raise ModelFormatError("Bytes excedentes no arquivo de modelo")

    return ForestModel(trees, hyperparams, n_features, scaler, _SCALING_MODES[scaling_code],
                       feature_names)

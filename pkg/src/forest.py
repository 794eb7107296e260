"""
Random Forest implementado do zero

Árvores CART binárias com impureza de Gini, limite de profundidade e os três
modos de subamostragem de atributos (sqrt, log2, todos), agregadas por
bootstrap e combinadas por voto majoritário.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

try:
    from .errors import ConfigError, DataFormatError, TrainingError
    from .flowdata import ScalerParams
except ImportError:
    from errors import ConfigError, DataFormatError, TrainingError
    from flowdata import ScalerParams


logger = logging.getLogger(__name__)

PREDICT_BLOCK_ROWS = 65536
# elementos (atributos x linhas) avaliados de uma vez na busca de divisão
SPLIT_BLOCK_ELEMENTS = 1 << 20


class FeatureMode(Enum):
    """Quantidade de atributos candidatos sorteados a cada divisão."""
    SQRT = "sqrt"
    LOG2 = "log2"
    ALL = "all"

    def n_candidates(self, n_features: int) -> int:
        if self is FeatureMode.SQRT:
            return max(1, math.isqrt(n_features))
        if self is FeatureMode.LOG2:
            return max(1, int(math.floor(math.log2(n_features))))
        return n_features

    @classmethod
    def parse(cls, text: Union[str, "FeatureMode", None]) -> "FeatureMode":
        if isinstance(text, FeatureMode):
            return text
        key = "all" if text is None else str(text).strip().lower()
        if key == "none":
            key = "all"
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"Modo de atributos inválido: '{text}' (use sqrt, log2 ou all)")


@dataclass(frozen=True)
class ForestHyperparams:
    n_estimators: int
    max_depth: int
    feature_mode: FeatureMode = FeatureMode.ALL
    seed: int = 42
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError(f"n_estimators deve ser >= 1, recebido {self.n_estimators}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth deve ser >= 1, recebido {self.max_depth}")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split deve ser >= 2")
        if self.seed < 0:
            raise ConfigError("seed deve ser não negativa")
        object.__setattr__(self, "feature_mode", FeatureMode.parse(self.feature_mode))

    def with_seed(self, seed: int) -> "ForestHyperparams":
        return replace(self, seed=seed)

    def to_dict(self) -> Dict:
        return {
            'n_estimators': self.n_estimators,
            'max_depth': self.max_depth,
            'feature_mode': self.feature_mode.value,
            'seed': self.seed,
            'min_samples_split': self.min_samples_split,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ForestHyperparams":
        return cls(
            n_estimators=int(data['n_estimators']),
            max_depth=int(data['max_depth']),
            feature_mode=FeatureMode.parse(data.get('feature_mode', 'all')),
            seed=int(data.get('seed', 42)),
            min_samples_split=int(data.get('min_samples_split', 2)),
        )


@dataclass(frozen=True)
class Leaf:
    class_counts: Tuple[int, int]

    @property
    def prediction(self) -> int:
        # empate -> benigno
        return 1 if self.class_counts[1] > self.class_counts[0] else 0


@dataclass(frozen=True)
class Internal:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


class Split(NamedTuple):
    feature_index: int
    threshold: float
    weighted_gini: float


def derive_seed(seed: int, index: int) -> int:
    """Semente independente e reprodutível para o fluxo (seed, index)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def gini(class_counts: Sequence[int]) -> float:
    """1 - soma(p_i^2) sobre as duas classes."""
    c0, c1 = int(class_counts[0]), int(class_counts[1])
    if c0 < 0 or c1 < 0:
        raise ValueError("Contagens de classe não podem ser negativas")
    total = c0 + c1
    if total == 0:
        raise ValueError("gini indefinido para nó vazio")
    p0 = c0 / total
    p1 = c1 / total
    return 1.0 - (p0 * p0 + p1 * p1)


def _midpoint(low: float, high: float) -> float:
    mid = (low + high) / 2.0
    if not math.isfinite(mid):
        mid = low / 2.0 + high / 2.0
    # valores adjacentes em ponto flutuante: o ponto médio colapsaria em high
    if mid >= high:
        mid = low
    return mid


def presort(X: np.ndarray) -> np.ndarray:
    """
    Ordem estável das linhas de X por atributo.

    Returns:
        Array (n_features, n_rows) int32; a linha j lista os índices em
        ordem crescente de X[:, j]
    """
    X = np.asfortranarray(X, dtype=np.float64)
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))


class _TreeBuilder:
    """
    Cresce uma árvore sobre linhas com peso (multiplicidade no bootstrap).

    Cada nó carrega a matriz (n_features, m) das suas linhas já ordenadas
    por atributo; a partição em filhos usa uma máscara estável, então nada é
    reordenado abaixo da raiz.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, weights: np.ndarray,
                 hyperparams: Optional[ForestHyperparams] = None,
                 rng: Optional[np.random.Generator] = None):
        self.X = np.asfortranarray(X, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.int64)
        self.weighted_ones = self.weights * np.asarray(y, dtype=np.int64)
        self.hyperparams = hyperparams
        self.rng = rng
        self.goes_left = np.zeros(self.X.shape[0], dtype=bool)

    def root(self, order: np.ndarray) -> np.ndarray:
        """Restringe a ordenação global às linhas com peso positivo."""
        present = self.weights[order] > 0
        return order[present].reshape(order.shape[0], -1)

    def counts(self, sorted_rows: np.ndarray) -> Tuple[int, int]:
        rows = sorted_rows[0]
        total = int(self.weights[rows].sum())
        ones = int(self.weighted_ones[rows].sum())
        return total - ones, ones

    def best_split(self, sorted_rows: np.ndarray,
                   candidates: np.ndarray) -> Optional[Split]:
        m = sorted_rows.shape[1]
        if m < 2:
            return None
        zeros, ones = self.counts(sorted_rows)
        n = zeros + ones
        if ones == 0 or zeros == 0:
            return None

        best: Optional[Split] = None
        step = max(1, SPLIT_BLOCK_ELEMENTS // m)
        for start in range(0, candidates.shape[0], step):
            features = candidates[start:start + step]
            order = sorted_rows[features]
            values = self.X[order, features[:, None]]
            n_left = np.cumsum(self.weights[order], axis=1)[:, :-1]
            ones_left = np.cumsum(self.weighted_ones[order], axis=1)[:, :-1]
            n_right = n - n_left
            ones_right = ones - ones_left
            zeros_left = n_left - ones_left
            zeros_right = n_right - ones_right

            p0 = zeros_left / n_left
            p1 = ones_left / n_left
            gini_left = 1.0 - (p0 * p0 + p1 * p1)
            p0 = zeros_right / n_right
            p1 = ones_right / n_right
            gini_right = 1.0 - (p0 * p0 + p1 * p1)
            weighted = (n_left * gini_left + n_right * gini_right) / n
            # só fronteiras entre valores distintos são limiares
            weighted[values[:, 1:] == values[:, :-1]] = np.inf

            # argmin achatado: menor atributo, depois menor limiar
            i, cut = np.unravel_index(int(np.argmin(weighted)), weighted.shape)
            score = float(weighted[i, cut])
            if math.isinf(score):
                continue
            if best is None or score < best.weighted_gini:
                threshold = _midpoint(float(values[i, cut]), float(values[i, cut + 1]))
                best = Split(int(features[i]), threshold, score)
        return best

    def partition(self, sorted_rows: np.ndarray,
                  split: Split) -> Tuple[np.ndarray, np.ndarray]:
        rows = sorted_rows[0]
        self.goes_left[rows] = self.X[rows, split.feature_index] <= split.threshold
        mask = self.goes_left[sorted_rows]
        d = sorted_rows.shape[0]
        return sorted_rows[mask].reshape(d, -1), sorted_rows[~mask].reshape(d, -1)

    def grow(self, sorted_rows: np.ndarray, depth: int = 0) -> TreeNode:
        hp = self.hyperparams
        counts = self.counts(sorted_rows)
        total = counts[0] + counts[1]
        if (depth >= hp.max_depth or counts[0] == 0 or counts[1] == 0
                or total < hp.min_samples_split):
            return Leaf(counts)

        candidates = _draw_candidates(self.X.shape[1], hp.feature_mode, self.rng)
        split = self.best_split(sorted_rows, candidates)
        if split is None:
            return Leaf(counts)

        left_rows, right_rows = self.partition(sorted_rows, split)
        left = self.grow(left_rows, depth + 1)
        right = self.grow(right_rows, depth + 1)
        return Internal(split.feature_index, split.threshold, left, right)


def _multiplicity(row_indices: np.ndarray, n_rows: int) -> np.ndarray:
    rows = np.asarray(row_indices, dtype=np.int64)
    if rows.shape[0] == 0:
        raise ValueError("Conjunto de linhas vazio")
    return np.bincount(rows, minlength=n_rows)


def best_split(X: np.ndarray, y: np.ndarray, row_indices: np.ndarray,
               candidate_features: Sequence[int]) -> Optional[Split]:
    """
    Busca exaustiva do par (atributo, limiar) de menor Gini ponderado.

    Limiares são os pontos médios entre valores distintos consecutivos.
    Empates: menor índice de atributo, depois menor limiar. Linhas
    repetidas em row_indices contam com a sua multiplicidade.

    Returns:
        Split, ou None se o nó é puro ou nenhum candidato separa as linhas
    """
    if len(candidate_features) == 0:
        raise ValueError("Conjunto de atributos candidatos vazio")
    rows = np.asarray(row_indices)
    if rows.shape[0] < 2:
        return None
    builder = _TreeBuilder(X, y, _multiplicity(rows, X.shape[0]))
    candidates = np.array(sorted({int(f) for f in candidate_features}), dtype=np.int64)
    return builder.best_split(builder.root(presort(X)), candidates)


def _draw_candidates(n_features: int, mode: FeatureMode,
                     rng: np.random.Generator) -> np.ndarray:
    k = mode.n_candidates(n_features)
    if k >= n_features:
        return np.arange(n_features)
    return np.sort(rng.choice(n_features, size=k, replace=False))


def grow_tree(X: np.ndarray, y: np.ndarray, row_indices: np.ndarray,
              hyperparams: ForestHyperparams, rng: np.random.Generator,
              order: Optional[np.ndarray] = None) -> TreeNode:
    """
    Cresce uma árvore a partir das linhas indicadas (com repetição).

    Para em max_depth, em nó puro, com menos de min_samples_split linhas ou
    sem divisão válida; cada nó interno sorteia um novo subconjunto de
    atributos candidatos.

    Args:
        order: presort(X), reaproveitado entre árvores do mesmo X
    """
    weights = _multiplicity(row_indices, X.shape[0])
    builder = _TreeBuilder(X, y, weights, hyperparams, rng)
    if order is None:
        order = presort(X)
    return builder.grow(builder.root(order))


class FlatTree:
    """
    Árvore achatada em arrays na pré-ordem (feature = -1 marca folha).

    É a forma usada na predição vetorizada e no arquivo de modelo.
    """

    def __init__(self, feature: np.ndarray, threshold: np.ndarray,
                 left: np.ndarray, right: np.ndarray,
                 count0: np.ndarray, count1: np.ndarray):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.count0 = np.asarray(count0, dtype=np.int64)
        self.count1 = np.asarray(count1, dtype=np.int64)
        self.vote = (self.count1 > self.count0).astype(np.int32)

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @classmethod
    def from_node(cls, root: TreeNode) -> "FlatTree":
        feature, threshold, left, right, count0, count1 = [], [], [], [], [], []

        def visit(node: TreeNode) -> int:
            index = len(feature)
            if isinstance(node, Leaf):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                count0.append(node.class_counts[0])
                count1.append(node.class_counts[1])
                return index
            feature.append(node.feature_index)
            threshold.append(node.threshold)
            left.append(-1)
            right.append(-1)
            count0.append(0)
            count1.append(0)
            left[index] = visit(node.left)
            right[index] = visit(node.right)
            count0[index] = count0[left[index]] + count0[right[index]]
            count1[index] = count1[left[index]] + count1[right[index]]
            return index

        visit(root)
        return cls(feature, threshold, left, right, count0, count1)

    def to_node(self, index: int = 0) -> TreeNode:
        if self.feature[index] < 0:
            return Leaf((int(self.count0[index]), int(self.count1[index])))
        return Internal(int(self.feature[index]), float(self.threshold[index]),
                        self.to_node(int(self.left[index])),
                        self.to_node(int(self.right[index])))

    def depth(self) -> int:
        """Maior número de arestas entre a raiz e uma folha."""
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.arange(X.shape[0])
        while active.shape[0]:
            current = node[active]
            features = self.feature[current]
            internal = features >= 0
            active, current, features = active[internal], current[internal], features[internal]
            if not active.shape[0]:
                break
            goes_left = X[active, features] <= self.threshold[current]
            node[active] = np.where(goes_left, self.left[current], self.right[current])
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.vote[self.leaf_index(X)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlatTree):
            return NotImplemented
        return all(np.array_equal(getattr(self, name), getattr(other, name))
                   for name in ("feature", "threshold", "left", "right", "count0", "count1"))


@dataclass
class ForestModel:
    """Ensemble treinado; imutável após fit_forest."""
    trees: List[FlatTree]
    hyperparams: ForestHyperparams
    n_features_trained: int
    # parâmetros de padronização levados junto para a predição
    scaler: Optional[ScalerParams] = None
    scaling_mode: Optional[str] = None
    # ordem das colunas vista no treino
    feature_names: Optional[List[str]] = None

    def __post_init__(self):
        if len(self.trees) != self.hyperparams.n_estimators:
            raise TrainingError(
                f"{len(self.trees)} árvores para n_estimators={self.hyperparams.n_estimators}"
            )
        if self.feature_names is not None and len(self.feature_names) != self.n_features_trained:
            raise TrainingError(
                f"{len(self.feature_names)} nomes para {self.n_features_trained} atributos"
            )
        for tree in self.trees:
            if tree.feature.max(initial=-1) >= self.n_features_trained:
                raise TrainingError("Árvore referencia atributo inexistente")

    def roots(self) -> List[TreeNode]:
        return [tree.to_node() for tree in self.trees]


def _fit_tree(X: np.ndarray, y: np.ndarray, order: np.ndarray,
              hyperparams: ForestHyperparams, tree_index: int) -> FlatTree:
    rng = np.random.default_rng([hyperparams.seed, tree_index])
    bootstrap = rng.integers(0, X.shape[0], size=X.shape[0])
    return FlatTree.from_node(grow_tree(X, y, bootstrap, hyperparams, rng, order))


def fit_forest(X: np.ndarray, y: np.ndarray, hyperparams: ForestHyperparams,
               n_jobs: int = 1) -> ForestModel:
    """
    Treina n_estimators árvores, cada uma sobre uma amostra bootstrap de n
    linhas com reposição. O resultado não depende de n_jobs.

    X é ordenado uma única vez por atributo; cada árvore reaproveita essa
    ordem e só a filtra pelas linhas do seu bootstrap.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise DataFormatError(f"X {X.shape} e y {y.shape} incompatíveis")
    if np.unique(y).shape[0] < 2:
        raise TrainingError("Dados de treino com uma única classe")

    order = presort(X)
    if n_jobs == 1:
        trees = [_fit_tree(X, y, order, hyperparams, t)
                 for t in range(hyperparams.n_estimators)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_fit_tree)(X, y, order, hyperparams, t)
            for t in range(hyperparams.n_estimators)
        )
    logger.debug(
        f"Floresta treinada: {hyperparams.n_estimators} árvores, "
        f"profundidade <= {hyperparams.max_depth}, modo {hyperparams.feature_mode.value}"
    )
    return ForestModel(list(trees), hyperparams, X.shape[1])


def _check_columns(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features_trained:
        got = X.shape[1] if X.ndim == 2 else X.ndim
        raise DataFormatError(
            f"Número de colunas incompatível: entrada tem {got}, "
            f"modelo foi treinado com {model.n_features_trained}"
        )
    return X


def _block_votes(trees: List[FlatTree], X: np.ndarray) -> np.ndarray:
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in trees:
        votes += tree.predict(X)
    return votes


def vote_counts(model: ForestModel, X: np.ndarray, n_jobs: int = 1) -> np.ndarray:
    """Número de árvores que votam ataque, por linha."""
    X = _check_columns(model, X)
    blocks = [X[start:start + PREDICT_BLOCK_ROWS]
              for start in range(0, X.shape[0], PREDICT_BLOCK_ROWS)]
    if not blocks:
        return np.zeros(0, dtype=np.int64)
    if n_jobs == 1 or len(blocks) == 1:
        parts = [_block_votes(model.trees, block) for block in blocks]
    else:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_block_votes)(model.trees, block) for block in blocks
        )
    return np.concatenate(parts)


def predict(model: ForestModel, X: np.ndarray, n_jobs: int = 1) -> np.ndarray:
    """Voto majoritário; empate (número par de árvores) -> 0."""
    votes = vote_counts(model, X, n_jobs)
    return (2 * votes > len(model.trees)).astype(np.int64)


def predict_score(model: ForestModel, X: np.ndarray, n_jobs: int = 1) -> np.ndarray:
    """Fração de árvores que votam ataque."""
    return vote_counts(model, X, n_jobs) / len(model.trees)

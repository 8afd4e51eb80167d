import json
import math
from dataclasses import dataclass, field

import numpy as np

from modules.errors import InsufficientBaselineError
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

MODEL_VERSION = 1
DISTANCE_FLOOR = 1e-12
# Nombre de cellules de la matrice de distances calculées par bloc
_BLOCK_CELLS = 2_000_000


@dataclass(frozen=True)
class LofModel:
    """Modèle LOF figé après apprentissage (lecture seule)."""

    k: int
    contamination: float
    feature_means: np.ndarray
    feature_stddevs: np.ndarray
    training_points: np.ndarray  # points standardisés
    k_distances: np.ndarray
    lrd: np.ndarray
    training_scores: np.ndarray
    score_threshold: float
    metadata: dict = field(default_factory=dict)
    # Ligne standardisée -> premier indice d'apprentissage identique
    row_index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_train(self) -> int:
        return len(self.training_points)

    def standardize(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.feature_means.size)
        return (points - self.feature_means) / self.feature_stddevs

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "k": self.k,
            "contamination": self.contamination,
            "feature_means": self.feature_means.tolist(),
            "feature_stddevs": self.feature_stddevs.tolist(),
            "raw_points": self.metadata["raw_points"],
            "degenerate_dims": self.metadata.get("degenerate_dims", []),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LofModel":
        if data.get("version") != MODEL_VERSION:
            raise ValueError(f"version de modèle non supportée : {data.get('version')}")
        # Réapprentissage déterministe à partir des points bruts
        return fit_baseline(
            data["raw_points"], k=data["k"], contamination=data["contamination"]
        )


def _neighbors(queries: np.ndarray, points: np.ndarray, k: int, excluded: np.ndarray):
    """Indices et distances des k plus proches voisins, par blocs.

    excluded[i] est l'indice d'apprentissage écarté des voisins de la
    requête i, ou -1.
    """
    n = len(points)
    block = max(1, _BLOCK_CELLS // max(n, 1))
    indices = np.empty((len(queries), k), dtype=np.int64)
    distances = np.empty((len(queries), k), dtype=float)
    for lo in range(0, len(queries), block):
        chunk = queries[lo : lo + block]
        diff = chunk[:, None, :] - points[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        skip = excluded[lo : lo + block]
        rows = np.flatnonzero(skip >= 0)
        dist[rows, skip[rows]] = np.inf
        part = np.argpartition(dist, k - 1, axis=1)[:, :k]
        part_dist = np.take_along_axis(dist, part, axis=1)
        # Ordre (distance, indice) pour un résultat reproductible
        order = np.lexsort((part, part_dist), axis=1)
        indices[lo : lo + block] = np.take_along_axis(part, order, axis=1)
        distances[lo : lo + block] = np.take_along_axis(part_dist, order, axis=1)
    return indices, distances


def _lrd(neighbor_idx, neighbor_dist, k_distances) -> np.ndarray:
    reach = np.maximum(k_distances[neighbor_idx], neighbor_dist)
    return 1.0 / np.maximum(reach.mean(axis=1), DISTANCE_FLOOR)


def fit_baseline(train_points, k: int = 20, contamination: float = 0.1) -> LofModel:
    raw = np.asarray(train_points, dtype=float)
    if raw.ndim != 2 or raw.shape[0] == 0:
        raise InsufficientBaselineError("baseline vide")
    if k < 1:
        raise ValueError("k doit être ≥ 1")
    if raw.shape[0] <= k:
        raise InsufficientBaselineError(
            f"baseline insuffisante : {raw.shape[0]} points pour k={k}"
        )
    distinct = len(np.unique(raw, axis=0))
    # Une baseline entièrement constante reste admise (cas dégénéré)
    if 1 < distinct <= k:
        raise InsufficientBaselineError(
            f"baseline insuffisante : {distinct} points distincts pour k={k}"
        )

    means = raw.mean(axis=0)
    stddevs = raw.std(axis=0)
    degenerate = [int(i) for i in np.flatnonzero(stddevs == 0)]
    if degenerate:
        logger.warning(f"Dimensions constantes {degenerate} : écart-type remplacé par 1")
    stddevs = np.where(stddevs == 0, 1.0, stddevs)
    points = (raw - means) / stddevs

    row_index: dict[bytes, int] = {}
    for i, row in enumerate(points):
        row_index.setdefault(row.tobytes(), i)

    idx, dist = _neighbors(points, points, k, np.arange(len(points)))
    k_distances = dist[:, -1]
    lrd = _lrd(idx, dist, k_distances)
    scores = lrd[idx].mean(axis=1) / lrd

    # Seuil : exactement ⌈contamination·n⌉ scores strictement au-dessus
    n_flagged = math.ceil(round(contamination * len(points), 9))
    ranked = np.sort(scores)[::-1]
    threshold = float(ranked[n_flagged]) if n_flagged < len(ranked) else -math.inf

    logger.info(
        f"Baseline LOF apprise : {len(points)} points, k={k}, seuil={threshold:.4f}"
    )
    return LofModel(
        k=k,
        contamination=contamination,
        feature_means=means,
        feature_stddevs=stddevs,
        training_points=points,
        k_distances=k_distances,
        lrd=lrd,
        training_scores=scores,
        score_threshold=threshold,
        metadata={"raw_points": raw.tolist(), "degenerate_dims": degenerate},
        row_index=row_index,
    )


def lof_scores(model: LofModel, points) -> np.ndarray:
    """Scores LOF de requêtes contre la baseline.

    Une requête identique à un point d'apprentissage est évaluée sans ce
    point parmi ses voisins : elle reçoit alors exactement le score
    d'apprentissage de ce point, comparable au seuil.
    """
    queries = model.standardize(points)
    if len(queries) == 0:
        return np.empty(0)
    excluded = np.array([model.row_index.get(q.tobytes(), -1) for q in queries], dtype=np.int64)
    idx, dist = _neighbors(queries, model.training_points, model.k, excluded)
    lrd = _lrd(idx, dist, model.k_distances)
    return model.lrd[idx].mean(axis=1) / lrd


def lof_score(model: LofModel, point) -> float:
    return float(lof_scores(model, [point])[0])


def save_model(model: LofModel, codebook, path) -> None:
    payload = {"model": model.to_dict(), "codebook": codebook.to_dict()}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
    logger.info(f"Modèle sauvegardé dans {path}")


def load_model(path):
    from modules.ingest.codebook import Codebook

    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    return LofModel.from_dict(payload["model"]), Codebook.from_dict(payload["codebook"])

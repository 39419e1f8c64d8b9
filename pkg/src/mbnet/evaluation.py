"""Final clustering of an embedding and accuracy against ground truth.

Agglomerative clustering produces the hard labels; clustering accuracy
scores them under the best one-to-one relabeling, found by solving an
assignment problem on the confusion matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import pdist

from .data import Embedding, LabelVector
from .errors import ConfigError

LINKAGES = ("average", "complete", "single", "ward")
METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class AhcConfig:
    c: int
    linkage: str = "average"
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        if self.c < 1:
            raise ConfigError(f"c must be >= 1, got {self.c}")
        if self.linkage not in LINKAGES:
            raise ConfigError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.linkage == "ward" and self.metric != "euclidean":
            raise ConfigError("ward linkage requires the euclidean metric")


@dataclass(frozen=True, eq=False)
class AccReport:
    """Best-mapping clustering accuracy.

    mapping[p] is the truth label assigned to predicted label p; the
    confusion matrix is padded square so the mapping is a bijection.
    """

    acc: float
    mapping: np.ndarray
    confusion: np.ndarray

    def to_json(self) -> dict:
        return {
            "acc": self.acc,
            "mapping": self.mapping.tolist(),
            "confusion": self.confusion.tolist(),
        }


def _first_occurrence_relabel(raw: np.ndarray) -> np.ndarray:
    # deterministic label names: cluster seen earlier gets the lower id
    out = np.empty(raw.shape[0], dtype=np.int64)
    seen: dict[int, int] = {}
    for i, r in enumerate(raw):
        out[i] = seen.setdefault(int(r), len(seen))
    return out


def ahc(Y: Embedding | np.ndarray, cfg: AhcConfig) -> LabelVector:
    """Bottom-up merging under the configured linkage until c clusters remain."""
    X = Y.values if isinstance(Y, Embedding) else np.asarray(Y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"embedding must be 2-d, got shape {X.shape}")
    n = X.shape[0]
    if n < cfg.c:
        raise ValueError(f"cannot form {cfg.c} clusters from {n} points")
    if cfg.c == n:
        return LabelVector(np.arange(n), n)
    if cfg.c == 1:
        return LabelVector(np.zeros(n, dtype=np.int64), 1)
    d = pdist(X, metric=cfg.metric)
    if cfg.metric == "cosine":
        # zero rows have undefined angle; treat them as orthogonal to everything
        d = np.nan_to_num(d, nan=1.0)
    merges = linkage(d, method=cfg.linkage)
    raw = cut_tree(merges, n_clusters=cfg.c).ravel()
    return LabelVector(_first_occurrence_relabel(raw), cfg.c)


def accuracy(pred: LabelVector, truth: LabelVector) -> AccReport:
    """Fraction of points matched under the best predicted-to-truth bijection."""
    if pred.n != truth.n:
        raise ValueError(f"label lengths differ: {pred.n} vs {truth.n}")
    n = pred.n
    if n == 0:
        raise ValueError("empty label vectors")
    side = max(pred.c, truth.c)
    confusion = np.zeros((side, side), dtype=np.int64)
    np.add.at(confusion, (pred.labels, truth.labels), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    mapping = np.empty(side, dtype=np.int64)
    mapping[rows] = cols
    acc = float(confusion[rows, cols].sum()) / n
    return AccReport(acc=acc, mapping=mapping, confusion=confusion)

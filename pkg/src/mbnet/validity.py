"""Cluster validity criteria over a labeled embedding.

Four optimization-like criteria (SWC, PB, PBM, VRC) score how well a
partition separates an embedding.  All distances here are Euclidean; a
higher score always means better separation.  Perfectly separated
degenerate cases (zero within-cluster spread) score +inf with the
degenerate flag set, so rankings still place them first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import Embedding, LabelVector
from .errors import DegenerateCriterionError

CRITERIA = ("SWC", "PB", "PBM", "VRC")


@dataclass(frozen=True)
class CriterionScore:
    value: float
    criterion: str
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not self.degenerate and not math.isfinite(self.value):
            raise ValueError(f"non-finite {self.criterion} score without degenerate flag")


@dataclass(frozen=True, eq=False)
class ValidityDiagnostics:
    """Every intermediate quantity behind the four criteria.

    mean_to_cluster[i, q] is the mean distance from point i to the
    members of cluster q; for i's own cluster the point itself is
    excluded, which makes that column equal a (and 0.0 for singletons).
    """

    s: np.ndarray              # per-point silhouette
    a: np.ndarray              # mean within-cluster distance, 0 for singletons
    b: np.ndarray              # min over other clusters of mean_to_cluster
    mean_to_cluster: np.ndarray
    d_w: float
    d_b: float
    s_d: float
    w_d: int
    b_d: int
    t: int
    e_1: float
    e_k: float
    d_k: float
    grand_mean: np.ndarray
    centroids: np.ndarray
    sizes: np.ndarray
    trace_w: float
    trace_b: float
    h: int

    def to_json(self) -> dict:
        return {
            "s": self.s.tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "mean_to_cluster": self.mean_to_cluster.tolist(),
            "d_w": self.d_w,
            "d_b": self.d_b,
            "s_d": self.s_d,
            "w_d": self.w_d,
            "b_d": self.b_d,
            "t": self.t,
            "e_1": self.e_1,
            "e_k": self.e_k,
            "d_k": self.d_k,
            "grand_mean": self.grand_mean.tolist(),
            "centroids": self.centroids.tolist(),
            "sizes": self.sizes.tolist(),
            "trace_w": self.trace_w,
            "trace_b": self.trace_b,
            "h": self.h,
        }


def _as_matrix(Y: Embedding | np.ndarray) -> np.ndarray:
    X = Y.values if isinstance(Y, Embedding) else np.asarray(Y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"embedding must be 2-d, got shape {X.shape}")
    return X


def _check_partition(labels: LabelVector, n: int, criterion: str) -> np.ndarray:
    if labels.labels.shape[0] != n:
        raise ValueError(f"labels cover {labels.labels.shape[0]} points, embedding has {n}")
    if labels.c < 2:
        raise DegenerateCriterionError(f"{criterion} is undefined for fewer than 2 clusters")
    sizes = labels.sizes()
    if np.any(sizes == 0):
        raise ValueError(f"empty cluster {int(np.argmin(sizes))} in partition")
    return sizes


def _silhouette_parts(X: np.ndarray, lab: np.ndarray, c: int, sizes: np.ndarray):
    # G[i, q]: mean distance from i to cluster q, own cluster excluding i
    n = X.shape[0]
    D = squareform(pdist(X, metric="euclidean"))
    onehot = np.zeros((n, c))
    onehot[np.arange(n), lab] = 1.0
    sums = D @ onehot
    G = sums / sizes[np.newaxis, :]
    own = sizes[lab] - 1
    with np.errstate(invalid="ignore", divide="ignore"):
        G[np.arange(n), lab] = np.where(own > 0, sums[np.arange(n), lab] / own, 0.0)
    a = G[np.arange(n), lab]
    masked = G.copy()
    masked[np.arange(n), lab] = np.inf
    b = masked.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, (b - a) / denom, 0.0)
    s[own == 0] = 0.0  # singleton clusters contribute zero
    return D, G, a, b, s


def _moments(X: np.ndarray, lab: np.ndarray, c: int, sizes: np.ndarray):
    grand = X.mean(axis=0)
    cents = np.zeros((c, X.shape[1]))
    np.add.at(cents, lab, X)
    cents /= sizes[:, np.newaxis]
    return grand, cents


def swc(labels: LabelVector, Y: Embedding | np.ndarray) -> CriterionScore:
    """Mean silhouette width of the partition: (b - a) / max(a, b) per point."""
    X = _as_matrix(Y)
    sizes = _check_partition(labels, X.shape[0], "SWC")
    if X.shape[0] < 2:
        raise ValueError("SWC needs at least 2 points")
    *_, s = _silhouette_parts(X, labels.labels, labels.c, sizes)
    value = float(s.mean())
    assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12
    return CriterionScore(value=value, criterion="SWC")


def pb(labels: LabelVector, Y: Embedding | np.ndarray) -> CriterionScore:
    """Point-biserial correlation between distances and co-membership."""
    X = _as_matrix(Y)
    n = X.shape[0]
    sizes = _check_partition(labels, n, "PB")
    if np.any(sizes == n):
        raise ValueError("PB requires every cluster to be a proper subset")
    lab = labels.labels
    D, _, a, _, _ = _silhouette_parts(X, lab, labels.c, sizes)
    d_w = float(a.mean())
    outside = n - sizes[lab]
    d_b = float(((D.sum(axis=1) - a * (sizes[lab] - 1)) / outside).mean())
    w_d = int((sizes * (sizes - 1) // 2).sum())
    b_d = int((sizes * (n - sizes)).sum()) // 2
    t = n * (n - 1) // 2
    assert w_d + b_d == t
    if w_d == 0 or b_d == 0:
        # the sqrt coefficient vanishes before s_d can matter
        return CriterionScore(value=0.0, criterion="PB")
    # population standard deviation over the t pairwise distances
    s_d = float(np.std(squareform(D)))
    if s_d == 0.0:
        raise DegenerateCriterionError("PB is undefined when all pairwise distances are equal")
    value = (d_b - d_w) * math.sqrt(w_d * b_d / t**2) / s_d
    return CriterionScore(value=value, criterion="PB")


def pbm(labels: LabelVector, Y: Embedding | np.ndarray) -> CriterionScore:
    """((1/c) * (E1/EK) * DK)^2: grand spread over within spread times centroid separation."""
    X = _as_matrix(Y)
    sizes = _check_partition(labels, X.shape[0], "PBM")
    lab = labels.labels
    grand, cents = _moments(X, lab, labels.c, sizes)
    e_1 = float(np.linalg.norm(X - grand, axis=1).mean())
    e_k = float(np.linalg.norm(X - cents[lab], axis=1).mean())
    d_k = float(max(pdist(cents, metric="euclidean")))
    if e_k == 0.0:
        return CriterionScore(value=math.inf, criterion="PBM", degenerate=True)
    value = ((e_1 / e_k) * d_k / labels.c) ** 2
    return CriterionScore(value=value, criterion="PBM")


def vrc(labels: LabelVector, Y: Embedding | np.ndarray) -> CriterionScore:
    """Variance ratio (1/h) * ((n-c)/(c-1)) * tr(B)/tr(W)."""
    X = _as_matrix(Y)
    n, h = X.shape
    sizes = _check_partition(labels, n, "VRC")
    c = labels.c
    if n <= c:
        raise ValueError(f"VRC needs n > c, got n={n}, c={c}")
    lab = labels.labels
    grand, cents = _moments(X, lab, c, sizes)
    trace_w = float(((X - cents[lab]) ** 2).sum())
    trace_b = float((sizes[:, np.newaxis] * (cents - grand) ** 2).sum())
    total = float(((X - grand) ** 2).sum())
    assert abs((trace_w + trace_b) - total) <= 1e-8 * max(total, 1.0)
    if trace_w == 0.0:
        return CriterionScore(value=math.inf, criterion="VRC", degenerate=True)
    value = (trace_b / trace_w) * (n - c) / (c - 1) / h
    return CriterionScore(value=value, criterion="VRC")


_BY_NAME = {"SWC": swc, "PB": pb, "PBM": pbm, "VRC": vrc}


def criterion_fn(name: str):
    """Look up a criterion by name, case-insensitively."""
    fn = _BY_NAME.get(name.upper())
    if fn is None:
        raise ValueError(f"unknown criterion {name!r}, expected one of {CRITERIA}")
    return fn


def validity_diagnostics(labels: LabelVector, Y: Embedding | np.ndarray) -> ValidityDiagnostics:
    """All intermediate quantities of the four criteria for one partition."""
    X = _as_matrix(Y)
    n, h = X.shape
    sizes = _check_partition(labels, n, "diagnostics")
    lab = labels.labels
    c = labels.c
    D, G, a, b, s = _silhouette_parts(X, lab, c, sizes)
    grand, cents = _moments(X, lab, c, sizes)
    outside = n - sizes[lab]
    with np.errstate(invalid="ignore", divide="ignore"):
        per_point_between = np.where(
            outside > 0, (D.sum(axis=1) - a * (sizes[lab] - 1)) / outside, 0.0
        )
    w_d = int((sizes * (sizes - 1) // 2).sum())
    b_d = int((sizes * (n - sizes)).sum()) // 2
    t = n * (n - 1) // 2
    assert w_d + b_d == t
    trace_w = float(((X - cents[lab]) ** 2).sum())
    trace_b = float((sizes[:, np.newaxis] * (cents - grand) ** 2).sum())
    return ValidityDiagnostics(
        s=s,
        a=a,
        b=b,
        mean_to_cluster=G,
        d_w=float(a.mean()),
        d_b=float(per_point_between.mean()),
        s_d=float(np.std(squareform(D))),
        w_d=w_d,
        b_d=b_d,
        t=t,
        e_1=float(np.linalg.norm(X - grand, axis=1).mean()),
        e_k=float(np.linalg.norm(X - cents[lab], axis=1).mean()),
        d_k=float(max(pdist(cents, metric="euclidean"))) if c >= 2 else 0.0,
        grand_mean=grand,
        centroids=cents,
        sizes=sizes,
        trace_w=trace_w,
        trace_b=trace_b,
        h=h,
    )

"""PCA: dense covariance path for feature matrices, Gram path for sparse codes.

The sparse path never expands codes to binary vectors.  For a code with
implicit dimension D and n points, the centered n-by-n match-count Gram
matrix has the same nonzero spectrum as the D-dimensional covariance, so
its eigenvectors scaled by sqrt(eigenvalue) reproduce the PCA embedding
up to per-component sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .data import Embedding, SparseCode, code_gram, to_dense
from .errors import ZeroVarianceError

# eigenvalues below this fraction of the largest count as zero rank
RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Mean vector plus orthonormal principal axes (rows) and eigenvalues."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        comp = np.asarray(self.components, dtype=np.float64)
        eig = np.asarray(self.eigenvalues, dtype=np.float64)
        if comp.ndim != 2 or mean.ndim != 1 or comp.shape[1] != mean.shape[0]:
            raise ValueError("components must be (h, d) and mean (d,)")
        h = comp.shape[0]
        if eig.shape != (h,):
            raise ValueError("eigenvalues must have one entry per component")
        if np.any(np.diff(eig) > 0) or np.any(eig < 0):
            raise ValueError("eigenvalues must be nonincreasing and nonnegative")
        gram = comp @ comp.T
        if not np.allclose(gram, np.eye(h), atol=1e-8):
            raise ValueError("components must be orthonormal within 1e-8")
        for name, arr in (("mean", mean), ("components", comp), ("eigenvalues", eig)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def h(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # one sign convention everywhere: largest-magnitude entry positive
    for row in vectors:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            np.negative(row, out=row)
    return vectors


def pca_fit(X: np.ndarray, target_dim: int) -> PcaModel:
    """Fit the top min(target_dim, numerical rank) principal axes.

    Deterministic: component signs are fixed so each axis's
    largest-magnitude entry is positive.  All-identical rows raise
    ZeroVarianceError rather than returning an empty model.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("pca_fit needs an (n, d) matrix with n >= 2")
    if target_dim < 1:
        raise ValueError("target_dim must be >= 1")
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    _, svals, vt = np.linalg.svd(Xc, full_matrices=False)
    eig = svals**2 / (n - 1)
    if eig.size == 0 or eig[0] <= 0.0:
        raise ZeroVarianceError("all rows identical: nothing to fit")
    rank = int(np.sum(eig > RANK_RTOL * eig[0]))
    if rank == 0:
        raise ZeroVarianceError("all rows identical: nothing to fit")
    h = min(target_dim, rank)
    comp = _fix_signs(vt[:h].copy())
    return PcaModel(mean=mean, components=comp, eigenvalues=eig[:h].copy())


def pca_transform(model: PcaModel, X: np.ndarray) -> Embedding:
    """Project rows of X onto the model's axes: (X - mean) @ components.T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(
            f"expected (n, {model.d}) input, got {X.shape}"
        )
    return Embedding((X - model.mean) @ model.components.T)


def pca_sparse(code: SparseCode, target_dim: Optional[int] = None) -> Embedding:
    """PCA embedding of a sparse code's implicit binary expansion.

    Equals pca_transform(pca_fit(dense expansion)) up to per-component
    sign.  When the implicit dimension exceeds n the embedding comes from
    the eigendecomposition of the centered match-count Gram matrix; the
    binary expansion is used directly otherwise.

    target_dim defaults to min(100, n - 1, rank), the package-wide
    reduction convention; it is always clamped to the numerical rank.
    """
    n = code.n
    if n < 2:
        raise ValueError("pca_sparse needs n >= 2")
    want = min(100, n - 1) if target_dim is None else target_dim
    if want < 1:
        raise ValueError("target_dim must be >= 1")
    if code.implicit_dim <= n:
        dense = to_dense(code)
        model = pca_fit(dense, want)
        return pca_transform(model, dense)
    G = code_gram(code).astype(np.float64)
    # double centering: G_c = (X - mean)(X - mean)^T from G = X X^T
    rowm = G.mean(axis=1, keepdims=True)
    Gc = G - rowm - rowm.T + rowm.mean()
    evals, evecs = scipy.linalg.eigh(Gc)
    evals = evals[::-1].copy()
    evecs = evecs[:, ::-1]
    if evals[0] <= 0.0:
        raise ZeroVarianceError("all rows of the code are identical")
    rank = int(np.sum(evals > RANK_RTOL * evals[0]))
    if rank == 0:
        raise ZeroVarianceError("all rows of the code are identical")
    h = min(want, rank)
    emb = evecs[:, :h] * np.sqrt(evals[:h])
    return Embedding(_fix_signs(emb.T).T)


def pca_to_json(model: PcaModel) -> dict:
    return {
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
    }


def pca_from_json(doc: dict) -> PcaModel:
    return PcaModel(
        mean=np.asarray(doc["mean"], dtype=np.float64),
        components=np.asarray(doc["components"], dtype=np.float64),
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=np.float64),
    )

"""Linear-kernel distribution divergence between the ensemble mixture and each model.

For one-hot codes every inner product is a match count, so each of the
big double sums in the divergence collapses onto per-slot histograms:
sum_i x_{z,i} counts how often each (unit, centroid) slot fires across
the data.  All sums are therefore accumulated exactly in int64 before
any division, which keeps scores bit-stable across thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SparseCode
from .ensemble import MbnEnsemble


@dataclass(frozen=True, eq=False)
class MmdReport:
    """Per-model divergence scores and the weights derived from them.

    reduced records that the constant mixture self-term was skipped, in
    which case v values are a common offset away from the full scores.
    """

    v: np.ndarray
    v_min: float
    v_max: float
    w: np.ndarray
    reduced: bool

    def to_json(self) -> dict:
        return {
            "v": self.v.tolist(),
            "v_min": self.v_min,
            "v_max": self.v_max,
            "w": self.w.tolist(),
            "reduced": self.reduced,
        }


def _model_blocks(source: MbnEnsemble | SparseCode):
    code = source.meta_code if isinstance(source, MbnEnsemble) else source
    blocks = code.blocks
    k, v = blocks[0].k, blocks[0].V
    for i, b in enumerate(blocks):
        if b.k != k or b.V != v:
            raise ValueError(
                f"model {i} code has shape (k={b.k}, V={b.V}), expected (k={k}, V={v}):"
                " divergence needs all models in one implicit space"
            )
    return blocks, k, v


def _slot_histograms(blocks, k: int, n_units: int) -> np.ndarray:
    # hist[z, u*k + j] = how many points unit u of model z assigns to centroid j
    hists = np.empty((len(blocks), n_units * k), dtype=np.int64)
    offsets = np.arange(n_units, dtype=np.int64) * k
    for z, b in enumerate(blocks):
        slots = b.assignments.astype(np.int64) + offsets[np.newaxis, :]
        hists[z] = np.bincount(slots.ravel(), minlength=n_units * k)
    return hists


def mmd_scores(source: MbnEnsemble | SparseCode, include_constant: bool = False) -> np.ndarray:
    """Divergence of each model's code from the ensemble mixture.

    Smaller means the model's one-hot distribution sits closer to the
    mixture of all models.  With include_constant=False the mixture
    self-term, identical for every z, is dropped; rankings are
    unaffected.
    """
    blocks, k, n_units = _model_blocks(source)
    n = blocks[0].n
    if n < 2:
        raise ValueError("divergence needs at least 2 points")
    z_count = len(blocks)
    hists = _slot_histograms(blocks, k, n_units)
    # each code row holds exactly one 1 per unit, so the i=j diagonal is n*V
    diag = n * n_units
    self_pairs = (hists * hists).sum(axis=1) - diag
    cross = hists @ hists.sum(axis=0)
    pairs = n * (n - 1)
    v = self_pairs / pairs - (2.0 / z_count) * cross / float(n) ** 2
    if include_constant:
        v = v + self_pairs.sum() / (z_count * pairs)
    return v


def mmd_scores_dense(reference: np.ndarray, embeddings: list[np.ndarray]) -> np.ndarray:
    """Divergence of real-valued embeddings from a reference embedding.

    Same estimator structure as mmd_scores with the reference playing
    the mixture role (constant reference self-term dropped).  All
    matrices must share their width; truncate to a common dimension
    before calling.
    """
    ref = np.asarray(reference, dtype=np.float64)
    n, h = ref.shape
    if n < 2:
        raise ValueError("divergence needs at least 2 points")
    ref_sum = ref.sum(axis=0)
    out = np.empty(len(embeddings))
    for z, Y in enumerate(embeddings):
        Y = np.asarray(Y, dtype=np.float64)
        if Y.shape != (n, h):
            raise ValueError(f"embedding {z} has shape {Y.shape}, expected ({n}, {h})")
        col = Y.sum(axis=0)
        self_pairs = float(col @ col) - float((Y * Y).sum())
        out[z] = self_pairs / (n * (n - 1)) - 2.0 * float(ref_sum @ col) / float(n) ** 2
    return out


def mmd_weights(v: np.ndarray) -> np.ndarray:
    """Min-max flip of divergence scores: smallest score gets weight 1."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("v must be a nonempty vector")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return np.ones_like(v)
    return 1.0 - (v - lo) / (hi - lo)


def mmd_report(source: MbnEnsemble | SparseCode, include_constant: bool = False) -> MmdReport:
    v = mmd_scores(source, include_constant=include_constant)
    return MmdReport(
        v=v,
        v_min=float(v.min()),
        v_max=float(v.max()),
        w=mmd_weights(v),
        reduced=not include_constant,
    )

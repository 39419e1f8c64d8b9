"""Pick the best B base models out of a trained ensemble, without labels.

Three strategies produce one weight per model: scoring each model's
embedding against a clustering of the ensemble meta-embedding (SO),
scoring each model's own clustering against the meta-embedding (rSO),
or ranking models by divergence from the ensemble mixture (SD).  The
top-B codes are concatenated and reduced into the selected embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabelVector, SparseCode
from .divergence import mmd_scores, mmd_scores_dense, mmd_weights
from .ensemble import MbnEnsemble, meta_embedding
from .errors import ConfigError, DegenerateCriterionError, ZeroVarianceError
from .evaluation import AhcConfig, ahc
from .reduction import Embedding, pca_sparse
from .validity import criterion_fn

MODES = ("so", "sd", "rso")
DEFAULT_B = {"so": 3, "rso": 3, "sd": 10}


@dataclass(frozen=True)
class SelectionConfig:
    mode: str
    criterion: str | None = None
    n_selected: int | None = None
    n_classes: int | None = None
    embed_dim: int | None = None
    linkage: str = "average"
    metric: str = "euclidean"
    alternate: bool = False

    def __post_init__(self) -> None:
        mode = self.mode.lower()
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if mode in ("so", "rso"):
            if self.criterion is None:
                raise ConfigError(f"mode {mode!r} needs a validity criterion")
            if self.n_classes is None:
                raise ConfigError(f"mode {mode!r} needs the class count")
            if self.n_classes < 2:
                raise ConfigError(f"class count must be >= 2, got {self.n_classes}")
            criterion_fn(self.criterion)  # fail early on unknown names
        if self.n_selected is not None and self.n_selected < 1:
            raise ConfigError(f"n_selected must be >= 1, got {self.n_selected}")

    def resolved_b(self, n_models: int) -> int:
        b = self.n_selected
        if b is None:
            b = min(DEFAULT_B[self.mode], n_models)
        if b > n_models:
            raise ConfigError(f"n_selected={b} exceeds ensemble size {n_models}")
        return b


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Weights for all models plus the concatenated top-B representation.

    chosen holds the winning model indices in descending-weight order;
    selected_code keeps its blocks in ascending model-index order.
    """

    weights: np.ndarray
    chosen: np.ndarray
    selected_code: SparseCode
    selected_embedding: Embedding
    reference_labels: LabelVector | None
    mode: str
    criterion: str | None = None

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "criterion": self.criterion,
            "weights": self.weights.tolist(),
            "chosen": self.chosen.tolist(),
            "reference_labels": (
                None if self.reference_labels is None else self.reference_labels.labels.tolist()
            ),
        }


def _rank(weights: np.ndarray, b: int) -> np.ndarray:
    # descending weight, exact ties broken by lower model index
    order = np.lexsort((np.arange(weights.shape[0]), -weights))
    return order[:b]


def _assemble(ens: MbnEnsemble, weights: np.ndarray, b: int, cfg: SelectionConfig,
              labels: LabelVector | None) -> SelectionResult:
    chosen = _rank(weights, b)
    blocks = tuple(ens.meta_code.blocks[z] for z in sorted(chosen.tolist()))
    code = SparseCode(blocks)
    return SelectionResult(
        weights=weights,
        chosen=chosen,
        selected_code=code,
        selected_embedding=pca_sparse(code, cfg.embed_dim),
        reference_labels=labels,
        mode=cfg.mode,
        criterion=cfg.criterion.upper() if cfg.criterion else None,
    )


def _model_embedding(ens: MbnEnsemble, z: int, cfg: SelectionConfig) -> Embedding:
    code = SparseCode((ens.meta_code.blocks[z],))
    if cfg.alternate:
        # score the sparse code itself through its exact full-rank embedding
        return pca_sparse(code, code.n - 1)
    return pca_sparse(code, cfg.embed_dim)


def _criterion_weights(ens: MbnEnsemble, cfg: SelectionConfig, score_one) -> np.ndarray:
    weights = np.empty(ens.n_models)
    failures = 0
    for z in range(ens.n_models):
        try:
            weights[z] = score_one(z).value
        except (DegenerateCriterionError, ZeroVarianceError):
            weights[z] = -np.inf
            failures += 1
    if failures == ens.n_models:
        raise DegenerateCriterionError(
            f"criterion {cfg.criterion.upper()} is degenerate on every model"
        )
    return weights


def select_so(ens: MbnEnsemble, cfg: SelectionConfig) -> SelectionResult:
    """Weights from clustering the meta-embedding once and scoring each model's embedding."""
    if cfg.mode != "so":
        raise ConfigError(f"select_so requires mode 'so', got {cfg.mode!r}")
    crit = criterion_fn(cfg.criterion)
    reference = ahc(
        meta_embedding(ens, cfg.embed_dim),
        AhcConfig(c=cfg.n_classes, linkage=cfg.linkage, metric=cfg.metric),
    )
    weights = _criterion_weights(
        ens, cfg, lambda z: crit(reference, _model_embedding(ens, z, cfg))
    )
    return _assemble(ens, weights, cfg.resolved_b(ens.n_models), cfg, reference)


def select_rso(ens: MbnEnsemble, cfg: SelectionConfig) -> SelectionResult:
    """Weights from clustering each model's embedding and scoring the meta-embedding with it."""
    if cfg.mode != "rso":
        raise ConfigError(f"select_rso requires mode 'rso', got {cfg.mode!r}")
    crit = criterion_fn(cfg.criterion)
    meta = meta_embedding(ens, cfg.embed_dim)
    ahc_cfg = AhcConfig(c=cfg.n_classes, linkage=cfg.linkage, metric=cfg.metric)

    def score_one(z: int):
        labels = ahc(_model_embedding(ens, z, cfg), ahc_cfg)
        return crit(labels, meta)

    weights = _criterion_weights(ens, cfg, score_one)
    return _assemble(ens, weights, cfg.resolved_b(ens.n_models), cfg, None)


def select_sd(ens: MbnEnsemble, cfg: SelectionConfig) -> SelectionResult:
    """Weights from each model's divergence against the ensemble mixture; label-free."""
    if cfg.mode != "sd":
        raise ConfigError(f"select_sd requires mode 'sd', got {cfg.mode!r}")
    if cfg.alternate:
        ys = [pca_sparse(SparseCode((b,)), cfg.embed_dim).values for b in ens.meta_code.blocks]
        meta = meta_embedding(ens, cfg.embed_dim).values
        h = min(min(y.shape[1] for y in ys), meta.shape[1])
        v = mmd_scores_dense(meta[:, :h], [y[:, :h] for y in ys])
    else:
        v = mmd_scores(ens)
    weights = mmd_weights(v)
    return _assemble(ens, weights, cfg.resolved_b(ens.n_models), cfg, None)


def select(ens: MbnEnsemble, cfg: SelectionConfig) -> SelectionResult:
    """Dispatch to the strategy named by cfg.mode."""
    return {"so": select_so, "sd": select_sd, "rso": select_rso}[cfg.mode](ens, cfg)

"""Ensembles of bootstrap networks over one shared bottom layer.

A trained ensemble holds Z models that all consume the same bottom-layer
code; the per-model depth schedules differ only through their sampled
delta values.  The concatenation of the Z top-layer codes (the meta
code) shares blocks with the models, so dot products over the implicit
one-hot meta representation decompose additively over blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._kernels import mix, stream_uniform
from .data import Dataset, SparseCode, round_half_up
from .errors import ConfigError
from .network import (
    TAG_BOTTOM,
    TAG_DELTAS,
    TAG_MODEL,
    Layer,
    MbnConfig,
    MbnModel,
    config_from_json,
    config_to_json,
    layer_from_json,
    layer_to_json,
    model_from_json,
    model_to_json,
    schedule_layers,
    train_layer,
    train_mbn,
)
from .reduction import Embedding, pca_sparse


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings for an ensemble of models over one shared bottom layer."""

    base: MbnConfig
    n_models: int = 40
    delta_range: tuple[float, float] = (0.05, 0.95)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ConfigError(f"n_models must be >= 1, got {self.n_models}")
        lo, hi = self.delta_range
        if not (0.0 < lo <= hi < 1.0):
            raise ConfigError(f"delta_range must satisfy 0 < lo <= hi < 1, got {self.delta_range}")
        if not isinstance(self.base, MbnConfig):
            raise ConfigError("base must be an MbnConfig")


@dataclass(frozen=True, eq=False)
class MbnEnsemble:
    """Z trained models sharing one bottom layer, plus their meta code.

    meta_code's blocks are the models' top-layer output blocks, in model
    order; the constructor requires them to be the same objects so the
    shared-structure invariant cannot drift.
    """

    bottom: Layer
    models: tuple[MbnModel, ...]
    meta_code: SparseCode
    deltas: np.ndarray

    def __post_init__(self) -> None:
        z = len(self.models)
        if z < 1:
            raise ValueError("ensemble needs at least one model")
        if len(self.meta_code.blocks) != z:
            raise ValueError("meta_code must hold one block per model")
        for i, m in enumerate(self.models):
            if m.bottom is not self.bottom:
                raise ValueError(f"model {i} does not share the ensemble bottom layer")
            if m.output_code.blocks[0] is not self.meta_code.blocks[i]:
                raise ValueError(f"meta_code block {i} is not model {i}'s output block")
        d = np.asarray(self.deltas, dtype=np.float64)
        if d.shape != (z,):
            raise ValueError(f"deltas must have shape ({z},), got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "deltas", d)

    @property
    def n_models(self) -> int:
        return len(self.models)

    @property
    def n(self) -> int:
        return self.meta_code.n

    def equals(self, other: "MbnEnsemble") -> bool:
        return (
            self.n_models == other.n_models
            and self.bottom.equals(other.bottom)
            and np.array_equal(self.deltas, other.deltas)
            and all(a.equals(b) for a, b in zip(self.models, other.models))
        )


def sample_deltas(cfg: EnsembleConfig) -> np.ndarray:
    """The delta value for each model, drawn uniformly over delta_range.

    Counter-stream draws keyed by (seed, model index), so the values do
    not depend on Z: growing the ensemble keeps the existing deltas.
    """
    lo, hi = cfg.delta_range
    key = mix(cfg.seed, TAG_DELTAS)
    out = np.array(
        [lo + stream_uniform(key, z) * (hi - lo) for z in range(cfg.n_models)],
        dtype=np.float64,
    )
    out.setflags(write=False)
    return out


def train_bottom(data: Dataset, base: MbnConfig, salt: int | None = None, n_jobs: int = 1) -> Layer:
    """Train the shared bottom layer: k1 = round(bottom_fraction * n) clusterings of the raw features."""
    if data.n < 4:
        raise ValueError(f"need at least 4 points to train a bottom layer, got {data.n}")
    k1 = round_half_up(base.bottom_fraction * data.n)
    if salt is None:
        salt = mix(base.seed, TAG_BOTTOM)
    return train_layer(
        data,
        k=k1,
        n_units=base.clusterings_per_layer,
        feature_ratio=base.feature_ratio,
        key=salt,
        n_jobs=n_jobs,
    )


def train_ensemble(data: Dataset, cfg: EnsembleConfig, n_jobs: int = 1) -> MbnEnsemble:
    """Train Z models over one shared bottom layer and assemble the meta code."""
    base = cfg.base
    if base.top_k is None:
        raise ConfigError("base.top_k must be set to train an ensemble")
    k1 = round_half_up(base.bottom_fraction * data.n)
    # every schedule must be valid before any training starts
    if k1 <= base.top_k:
        raise ConfigError(f"top_k={base.top_k} must be < bottom layer k={k1}")
    deltas = sample_deltas(cfg)
    for dz in deltas:
        schedule_layers(k1, float(dz), base.top_k)

    bottom = train_bottom(data, base, salt=mix(cfg.seed, TAG_BOTTOM), n_jobs=n_jobs)
    if data.metric != base.metric:
        base = replace(base, metric=data.metric)
    models = []
    for z in range(cfg.n_models):
        cfg_z = replace(base, delta=float(deltas[z]))
        models.append(train_mbn(bottom, cfg_z, salt=mix(cfg.seed, TAG_MODEL, z), n_jobs=n_jobs))
    meta = SparseCode(tuple(m.output_code.blocks[0] for m in models))
    return MbnEnsemble(bottom=bottom, models=tuple(models), meta_code=meta, deltas=deltas)


def meta_embedding(ens: MbnEnsemble, dim: int | None = None) -> Embedding:
    """PCA embedding of the concatenated per-model output codes."""
    return pca_sparse(ens.meta_code, dim)


def ensemble_to_json(ens: MbnEnsemble, config: EnsembleConfig | None = None) -> dict:
    doc = {
        "format": "mbnet-ensemble",
        "version": 1,
        "n": ens.n,
        "deltas": [float(d) for d in ens.deltas],
        "bottom": layer_to_json(ens.bottom),
        "models": [model_to_json(m, include_bottom=False) for m in ens.models],
    }
    if config is not None:
        doc["config"] = {
            "n_models": config.n_models,
            "delta_range": list(config.delta_range),
            "seed": config.seed,
            "base": config_to_json(config.base),
        }
    return doc


def ensemble_from_json(doc: dict) -> MbnEnsemble:
    if doc.get("format") != "mbnet-ensemble":
        raise ValueError("not an ensemble document")
    n = int(doc["n"])
    bottom = layer_from_json(doc["bottom"], n)
    models = tuple(model_from_json(m, bottom=bottom) for m in doc["models"])
    meta = SparseCode(tuple(m.output_code.blocks[0] for m in models))
    deltas = np.asarray(doc["deltas"], dtype=np.float64)
    return MbnEnsemble(bottom=bottom, models=models, meta_code=meta, deltas=deltas)


def ensemble_config_from_json(doc: dict) -> EnsembleConfig:
    return EnsembleConfig(
        base=config_from_json(doc["base"]),
        n_models=int(doc["n_models"]),
        delta_range=(float(doc["delta_range"][0]), float(doc["delta_range"][1])),
        seed=int(doc["seed"]),
    )

"""One base model: random-centroid clustering layers driven by a shrink factor.

A layer holds V independent clustering units.  Each unit samples k data
points as centroids plus a random subset of the input coordinates, then
assigns every point to its nearest centroid: metric distance on dense
input at the bottom, match-count similarity on sparse codes above.  Layer
sizes follow k_m = delta * k_{m-1} (rounded) until they reach the target
top size, so delta alone controls the depth of the stack.

All sampling and tie-breaking derives from splitmix64 counter streams
keyed by (seed, model, layer, unit), which makes training bit-identical
across thread counts and lets stored models replay assignments exactly.
Tie draws are keyed by the content hash of a point's input row, so
re-encoding a duplicate of a training point reproduces the training
assignment even when several centroids tie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numba
import numpy as np
from scipy.spatial.distance import cdist

from . import _kernels
from .data import CodeBlock, Dataset, SparseCode, round_half_up
from .errors import ConfigError
from ._kernels import mix

# stream tags for the top-level key derivation
TAG_BOTTOM = 0
TAG_DELTAS = 1
TAG_MODEL = 2

# incremented on every layer fit; lets tests assert bottom-layer sharing
_fit_count = 0


def layer_fit_count() -> int:
    return _fit_count


def _set_threads(n_jobs: int) -> None:
    limit = numba.config.NUMBA_NUM_THREADS
    want = limit if n_jobs is None or n_jobs < 1 else n_jobs
    numba.set_num_threads(max(1, min(want, limit)))


@dataclass(frozen=True, eq=False)
class MbnConfig:
    """Hyperparameters of one base model."""

    delta: float = 0.5
    clusterings_per_layer: int = 400
    bottom_fraction: float = 0.5
    top_k: Optional[int] = None
    feature_ratio: float = 0.5
    metric: str = "euclidean"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.clusterings_per_layer < 1:
            raise ConfigError("clusterings_per_layer must be >= 1")
        if self.clusterings_per_layer > 32767:
            raise ConfigError("clusterings_per_layer above 32767 is unsupported")
        if not 0.0 < self.bottom_fraction <= 1.0:
            raise ConfigError("bottom_fraction must lie in (0, 1]")
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if not 0.0 < self.feature_ratio <= 1.0:
            raise ConfigError("feature_ratio must lie in (0, 1]")
        if self.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True, eq=False)
class ClusteringUnit:
    """One k-centroids clustering: sampled centroid rows + feature subset."""

    centroid_rows: np.ndarray
    feature_subset: np.ndarray
    tie_salt: int

    def __post_init__(self):
        rows = np.asarray(self.centroid_rows)
        sub = np.asarray(self.feature_subset)
        if rows.ndim != 1 or np.unique(rows).size != rows.size:
            raise ValueError("centroid_rows must be distinct")
        if sub.ndim != 1 or sub.size == 0:
            raise ValueError("feature_subset must be nonempty")

    @property
    def k(self) -> int:
        return self.centroid_rows.shape[0]


@dataclass(frozen=True, eq=False)
class Layer:
    """V trained clustering units plus their one-hot output block."""

    k: int
    output: CodeBlock
    # batched per-unit parameters; `units` exposes them as objects
    _subsets: np.ndarray = field(repr=False, default=None)
    _centroids: np.ndarray = field(repr=False, default=None)
    _salts: np.ndarray = field(repr=False, default=None)
    input_kind: str = "sparse"
    input_dim: int = 0
    input_k: int = 0

    def __post_init__(self):
        V = self.output.V
        if self.output.k != self.k:
            raise ValueError("output block k must equal the layer's k")
        for arr, name in (
            (self._subsets, "_subsets"),
            (self._centroids, "_centroids"),
            (self._salts, "_salts"),
        ):
            if arr is None or arr.shape[0] != V:
                raise ValueError(f"{name} must have one row per unit")
        if self._centroids.shape[1] != self.k:
            raise ValueError("_centroids must hold k rows per unit")
        if self.input_kind not in ("dense", "sparse"):
            raise ValueError("input_kind must be 'dense' or 'sparse'")

    @property
    def V(self) -> int:
        return self.output.V

    @property
    def n(self) -> int:
        return self.output.n

    @cached_property
    def units(self) -> tuple:
        return tuple(
            ClusteringUnit(
                centroid_rows=self._centroids[u],
                feature_subset=self._subsets[u],
                tie_salt=int(self._salts[u]),
            )
            for u in range(self.V)
        )

    def equals(self, other: "Layer") -> bool:
        return (
            self.k == other.k
            and self.input_kind == other.input_kind
            and self.input_dim == other.input_dim
            and self.input_k == other.input_k
            and np.array_equal(self._subsets, other._subsets)
            and np.array_equal(self._centroids, other._centroids)
            and np.array_equal(self._salts, other._salts)
            and np.array_equal(self.output.assignments, other.output.assignments)
        )


@dataclass(frozen=True, eq=False)
class MbnModel:
    """A trained stack: shared bottom layer reference plus owned layers."""

    config: MbnConfig
    layers: tuple
    output_code: SparseCode
    bottom: Layer

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a model owns at least one layer")
        ks = [self.bottom.k] + [lay.k for lay in self.layers]
        if any(b >= a for a, b in zip(ks, ks[1:])):
            raise ValueError("layer k values must strictly decrease")
        if self.config.top_k is not None and self.layers[-1].k != self.config.top_k:
            raise ValueError("top layer k must equal config.top_k")

    @property
    def input_block_shape(self) -> tuple:
        return (self.bottom.k, self.bottom.V)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def equals(self, other: "MbnModel") -> bool:
        return (
            len(self.layers) == len(other.layers)
            and all(a.equals(b) for a, b in zip(self.layers, other.layers))
            and self.output_code.equals(other.output_code)
            and self.bottom.equals(other.bottom)
        )


def schedule_layers(k1: int, delta: float, k_o: int) -> list:
    """Layer sizes k1 > k2 > ... > k_o with k_m = round(delta * k_{m-1}).

    Rounding is half-up; strict decrease is forced by clamping each step
    to at most k_{m-1} - 1; the first value at or below k_o is replaced by
    exactly k_o.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if k_o < 1 or k1 <= k_o:
        raise ValueError(f"need k1 > k_o >= 1, got k1={k1}, k_o={k_o}")
    sizes = [int(k1)]
    while True:
        nxt = min(round_half_up(delta * sizes[-1]), sizes[-1] - 1)
        if nxt <= k_o:
            sizes.append(int(k_o))
            return sizes
        sizes.append(nxt)


def train_layer(
    data: Union[Dataset, np.ndarray, SparseCode, CodeBlock],
    k: int,
    n_units: int,
    feature_ratio: float = 0.5,
    metric: str = "euclidean",
    key: int = 0,
    n_jobs: int = 1,
) -> Layer:
    """Train one layer of n_units independent k-centroids clusterings.

    Dense input (Dataset or matrix) is assigned by metric distance; a
    Dataset's own metric wins over the argument.  Sparse input (a
    single-block SparseCode) is assigned by match-count similarity and
    ignores the metric.  Each unit samples max(1, round(feature_ratio *
    dims)) input coordinates; on sparse input the coordinates are whole
    previous clustering units.
    """
    global _fit_count
    if isinstance(data, SparseCode):
        if len(data.blocks) != 1:
            raise ValueError("layer input must be a single-block code")
        data = data.blocks[0]
    if n_units < 1 or n_units > 32767:
        raise ValueError("n_units must lie in [1, 32767]")
    if not 0.0 < feature_ratio <= 1.0:
        raise ValueError("feature_ratio must lie in (0, 1]")

    if isinstance(data, CodeBlock):
        n = data.n
        if not 1 <= k <= min(n, 32767):
            raise ValueError(f"k must lie in [1, min(n, 32767)], got {k} for n={n}")
        f = max(1, round_half_up(feature_ratio * data.V))
        codeT = np.ascontiguousarray(data.assignments.T)
        order, starts = _kernels.group_columns(codeT, data.k)
        rowhash = _kernels.hash_rows(codeT)
        subsets, centroids, salts = _kernels.draw_layer_params(
            np.uint64(key), n_units, data.V, f, n, k
        )
        _set_threads(n_jobs)
        outT = _kernels.match_assign(
            order, starts, codeT, subsets, centroids, salts, rowhash, k
        )
        _fit_count += 1
        return Layer(
            k=k,
            output=CodeBlock(k, np.ascontiguousarray(outT.T)),
            _subsets=subsets,
            _centroids=centroids,
            _salts=salts,
            input_kind="sparse",
            input_dim=data.V,
            input_k=data.k,
        )

    if isinstance(data, Dataset):
        X, metric = data.features, data.metric
    else:
        X = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError("dense layer input must be an (n, d) matrix")
    n, d = X.shape
    if d > 32767:
        raise ValueError("dense inputs above 32767 columns are unsupported")
    if not 1 <= k <= min(n, 32767):
        raise ValueError(f"k must lie in [1, min(n, 32767)], got {k} for n={n}")
    f = max(1, round_half_up(feature_ratio * d))
    subsets, centroids, salts = _kernels.draw_layer_params(
        np.uint64(key), n_units, d, f, n, k
    )
    bits = np.ascontiguousarray(np.asarray(X, dtype=np.float64).T).view(np.uint64)
    rowhash = _kernels.hash_rows(bits)
    out = np.empty((n_units, n), dtype=np.int16)

    def run_units(units: Sequence[int]) -> None:
        for u in units:
            cols = subsets[u].astype(np.intp)
            sub = X[:, cols]
            cen = sub[centroids[u]]
            if metric == "cosine":
                dist = cdist(sub, cen, "cosine")
                # zero-norm rows make cosine undefined; treat as orthogonal
                np.nan_to_num(dist, copy=False, nan=1.0)
            else:
                dist = cdist(sub, cen, "sqeuclidean")
            _kernels.argmin_reservoir(dist, salts[u], rowhash, out[u])

    if n_jobs == 1 or n_units == 1:
        run_units(range(n_units))
    else:
        import os
        from concurrent.futures import ThreadPoolExecutor

        workers = n_jobs if n_jobs > 0 else (os.cpu_count() or 1)
        chunks = np.array_split(np.arange(n_units), min(n_units, workers * 4))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_units, chunks))
    _fit_count += 1
    return Layer(
        k=k,
        output=CodeBlock(k, np.ascontiguousarray(out.T)),
        _subsets=subsets,
        _centroids=centroids,
        _salts=salts,
        input_kind="dense",
        input_dim=d,
        input_k=0,
    )


def train_mbn(
    bottom: Layer,
    config: MbnConfig,
    salt: Optional[int] = None,
    n_jobs: int = 1,
) -> MbnModel:
    """Stack layers on a trained bottom layer until top_k is reached.

    The schedule starts at the bottom layer's k; one layer is trained per
    subsequent scheduled size, each consuming the previous layer's code.
    """
    if config.top_k is None:
        raise ConfigError("config.top_k must be set before training")
    if bottom.n < 2:
        raise ValueError("bottom layer output needs n >= 2 rows")
    sizes = schedule_layers(bottom.k, config.delta, config.top_k)
    if salt is None:
        salt = mix(config.seed, TAG_MODEL, 0)
    layers = []
    prev = bottom.output
    for m, k_m in enumerate(sizes[1:], start=1):
        lay = train_layer(
            prev,
            k_m,
            config.clusterings_per_layer,
            feature_ratio=config.feature_ratio,
            key=mix(salt, m),
            n_jobs=n_jobs,
        )
        layers.append(lay)
        prev = lay.output
    return MbnModel(
        config=config,
        layers=tuple(layers),
        output_code=SparseCode((layers[-1].output,)),
        bottom=bottom,
    )


def encode(model: MbnModel, bottom_code: SparseCode, n_jobs: int = 1) -> SparseCode:
    """Propagate new data (already bottom-encoded) through the stored stack.

    Encoding the model's own bottom output returns output_code exactly:
    grouping, match counting, and content-hash tie draws all reproduce.
    """
    if len(bottom_code.blocks) != 1:
        raise ValueError("bottom code must be a single block")
    block = bottom_code.blocks[0]
    want_k, want_v = model.input_block_shape
    if block.k != want_k or block.V != want_v:
        raise ValueError(
            f"bottom code shape (k={block.k}, V={block.V}) does not match "
            f"the training bottom (k={want_k}, V={want_v})"
        )
    newT = np.ascontiguousarray(block.assignments.T)
    train_prev = model.bottom.output
    _set_threads(n_jobs)
    for lay in model.layers:
        order, starts = _kernels.group_columns(newT, lay.input_k)
        rowhash = _kernels.hash_rows(newT)
        centT = np.ascontiguousarray(train_prev.assignments.T)
        newT = _kernels.match_assign(
            order, starts, centT, lay._subsets, lay._centroids, lay._salts,
            rowhash, lay.k,
        )
        train_prev = lay.output
    top = model.layers[-1]
    return SparseCode((CodeBlock(top.k, np.ascontiguousarray(newT.T)),))


def layer_to_json(layer: Layer) -> dict:
    return {
        "k": layer.k,
        "input_kind": layer.input_kind,
        "input_dim": layer.input_dim,
        "input_k": layer.input_k,
        "subsets": layer._subsets.tolist(),
        "centroids": layer._centroids.tolist(),
        "salts": [int(s) for s in layer._salts],
        "output": layer.output.assignments.ravel().tolist(),
    }


def layer_from_json(doc: dict, n: int) -> Layer:
    k = int(doc["k"])
    subsets = np.asarray(doc["subsets"], dtype=np.int16)
    v = subsets.shape[0]
    out = np.asarray(doc["output"], dtype=np.int64).reshape(n, v)
    return Layer(
        k=k,
        output=CodeBlock(k, out),
        _subsets=subsets,
        _centroids=np.asarray(doc["centroids"], dtype=np.int32),
        _salts=np.asarray([int(s) for s in doc["salts"]], dtype=np.uint64),
        input_kind=doc["input_kind"],
        input_dim=int(doc["input_dim"]),
        input_k=int(doc["input_k"]),
    )


def config_to_json(config: MbnConfig) -> dict:
    return {
        "delta": config.delta,
        "clusterings_per_layer": config.clusterings_per_layer,
        "bottom_fraction": config.bottom_fraction,
        "top_k": config.top_k,
        "feature_ratio": config.feature_ratio,
        "metric": config.metric,
        "seed": config.seed,
    }


def config_from_json(doc: dict) -> MbnConfig:
    return MbnConfig(**doc)


def model_to_json(model: MbnModel, include_bottom: bool = True) -> dict:
    doc = {
        "format": "mbnet-model",
        "version": 1,
        "n": model.bottom.n,
        "config": config_to_json(model.config),
        "layers": [layer_to_json(lay) for lay in model.layers],
    }
    if include_bottom:
        doc["bottom"] = layer_to_json(model.bottom)
    return doc


def model_from_json(doc: dict, bottom: Optional[Layer] = None) -> MbnModel:
    n = int(doc["n"])
    if bottom is None:
        bottom = layer_from_json(doc["bottom"], n)
    layers = tuple(layer_from_json(d, n) for d in doc["layers"])
    return MbnModel(
        config=config_from_json(doc["config"]),
        layers=layers,
        output_code=SparseCode((layers[-1].output,)),
        bottom=bottom,
    )

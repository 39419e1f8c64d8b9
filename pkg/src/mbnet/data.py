"""Core data types, CSV ingestion, synthetic fixtures, and code serialization.

The central representation is :class:`SparseCode`: the one-hot output of a
stack of clustering units stored as assignment indices, one ``(n, V)``
integer matrix per block.  The implicit binary expansion (one indicator
per centroid) is never materialized outside tests; inner products between
rows are match counts of their assignment entries.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataFormatError
from . import _kernels

_METRICS = ("euclidean", "cosine")

# assignment matrices are kept in int16; centroid counts beyond this would
# also break the layer kernels' count buffers
MAX_CENTROIDS = 32767


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def round_half_up(x: float) -> int:
    """The rounding rule used for every size computation (0.5 rounds up)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with an optional ground truth and a metric tag."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    metric: str = "euclidean"
    name: str = ""

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if n < 2:
            raise ValueError(f"invalid dataset: needs at least 2 rows, got {n}")
        if d < 1:
            raise ValueError("invalid dataset: needs at least 1 feature column")
        if not np.isfinite(X).all():
            raise ValueError("invalid dataset: features contain non-finite values")
        if self.metric not in _METRICS:
            raise ValueError(f"metric must be one of {_METRICS}, got {self.metric!r}")
        object.__setattr__(self, "features", _freeze(X))
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (n,):
                raise ValueError(f"labels must have shape ({n},), got {y.shape}")
            c = int(y.max()) + 1 if y.size else 0
            present = np.unique(y)
            if y.min() < 0 or len(present) != c:
                raise ValueError("labels must cover a contiguous range starting at 0")
            object.__setattr__(self, "labels", _freeze(y))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> Optional[int]:
        return None if self.labels is None else int(self.labels.max()) + 1


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Hard cluster assignment for n points, entries in [0, c)."""

    labels: np.ndarray
    c: int

    def __post_init__(self):
        y = np.asarray(self.labels, dtype=np.int64)
        if y.ndim != 1:
            raise ValueError("labels must be 1-D")
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if y.size and (y.min() < 0 or y.max() >= self.c):
            raise ValueError(f"label entries must lie in [0, {self.c})")
        object.__setattr__(self, "labels", _freeze(y))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.c)


@dataclass(frozen=True, eq=False)
class Embedding:
    """Low-dimensional real representation of n points."""

    values: np.ndarray

    def __post_init__(self):
        Y = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if Y.ndim != 2 or Y.shape[1] < 1:
            raise ValueError(f"embedding must be (n, h) with h >= 1, got {Y.shape}")
        if not np.isfinite(Y).all():
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "values", _freeze(Y))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class CodeBlock:
    """One block of clustering outputs: V units, k centroids each."""

    k: int
    assignments: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.assignments)
        if not np.issubdtype(A.dtype, np.integer):
            raise ValueError("assignments must be integers")
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"assignments must be a nonempty 2-D matrix, got {A.shape}")
        if not (1 <= self.k <= MAX_CENTROIDS):
            raise ValueError(f"k must be in [1, {MAX_CENTROIDS}], got {self.k}")
        if A.min() < 0 or A.max() >= self.k:
            raise ValueError(f"assignment entries must lie in [0, {self.k})")
        A = np.ascontiguousarray(A, dtype=np.int16)
        object.__setattr__(self, "assignments", _freeze(A))

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    @property
    def V(self) -> int:
        return self.assignments.shape[1]


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Ordered blocks of assignment matrices sharing one point set."""

    blocks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a SparseCode needs at least one block")
        n = blocks[0].n
        for b in blocks:
            if not isinstance(b, CodeBlock):
                raise ValueError("blocks must be CodeBlock instances")
            if b.n != n:
                raise ValueError(f"all blocks must share n={n}, got {b.n}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.blocks[0].n

    @property
    def implicit_dim(self) -> int:
        return sum(b.V * b.k for b in self.blocks)

    @property
    def units_total(self) -> int:
        return sum(b.V for b in self.blocks)

    def equals(self, other: "SparseCode") -> bool:
        if len(self.blocks) != len(other.blocks):
            return False
        return all(
            a.k == b.k and np.array_equal(a.assignments, b.assignments)
            for a, b in zip(self.blocks, other.blocks)
        )


def single_block_code(k: int, assignments: np.ndarray) -> SparseCode:
    return SparseCode((CodeBlock(k, assignments),))


def concat_codes(codes: Sequence[SparseCode]) -> SparseCode:
    """Concatenate codes along the implicit feature axis (blocks are shared)."""
    blocks = []
    for c in codes:
        blocks.extend(c.blocks)
    return SparseCode(tuple(blocks))


def to_dense(code: SparseCode) -> np.ndarray:
    """Explicit binary expansion, (n, implicit_dim).  Test/oracle use only."""
    n = code.n
    out = np.zeros((n, code.implicit_dim), dtype=np.float64)
    col = 0
    for b in code.blocks:
        A = b.assignments
        for v in range(b.V):
            out[np.arange(n), col + A[:, v]] = 1.0
            col += b.k
    return out


def code_gram(code: SparseCode) -> np.ndarray:
    """Pairwise match-count Gram matrix, (n, n) int64.

    Entry (i, j) counts clustering units that assign points i and j to the
    same centroid, which equals the dot product of the implicit binary
    rows.  Computed per block by grouping each unit's assignments.
    """
    n = code.n
    gram = np.zeros((n, n), dtype=np.int32)
    for b in code.blocks:
        codeT = np.ascontiguousarray(b.assignments.T)
        order, starts = _kernels.group_columns(codeT, b.k)
        _kernels.accumulate_match_gram(order, starts, gram)
    return gram.astype(np.int64)


def load_csv(
    path,
    label_column: Optional[int] = None,
    delimiter: str = ",",
    metric: str = "euclidean",
    name: Optional[str] = None,
) -> Dataset:
    """Parse a numeric CSV into a Dataset.

    Parameters
    ----------
    path : file path
    label_column : optional column index holding ground-truth labels; the
        column is removed from the features and re-indexed to 0..c-1.
    delimiter : field separator.
    metric : similarity metric tag for the dataset.
    name : dataset name (defaults to the file stem).

    Raises
    ------
    DataFormatError
        On ragged rows or non-numeric feature cells, naming the 1-based row.
    """
    rows = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for row in reader:
            if row:
                rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    width = len(rows[0])
    for idx, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataFormatError(
                f"{path}: ragged row {idx}: expected {width} fields, got {len(row)}"
            )
    if label_column is not None and not (0 <= label_column < width):
        raise DataFormatError(
            f"{path}: label_column {label_column} out of range for {width} columns"
        )
    feat_cols = [j for j in range(width) if j != label_column]
    if not feat_cols:
        raise DataFormatError(f"{path}: no feature columns left")
    n = len(rows)
    X = np.empty((n, len(feat_cols)), dtype=np.float64)
    for idx, row in enumerate(rows):
        for out_j, j in enumerate(feat_cols):
            try:
                X[idx, out_j] = float(row[j])
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {idx + 1}: non-numeric value {row[j]!r} "
                    f"in column {j}"
                ) from None
    labels = None
    if label_column is not None:
        raw = [row[label_column].strip() for row in rows]
        labels = _reindex_labels(raw)
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    try:
        return Dataset(features=X, labels=labels, metric=metric, name=name)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def _reindex_labels(raw: Sequence[str]) -> np.ndarray:
    # sort numerically when every label parses as a number, else lexically
    uniq = sorted(set(raw))
    try:
        uniq = sorted(set(raw), key=float)
    except ValueError:
        pass
    lut = {v: i for i, v in enumerate(uniq)}
    return np.array([lut[v] for v in raw], dtype=np.int64)


def load_labels(path, column: int = 0, delimiter: str = ",") -> LabelVector:
    """Read one CSV column as ground-truth labels, re-indexed to 0..c-1."""
    raw = []
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for idx, row in enumerate(reader, start=1):
            if not row:
                continue
            if not (0 <= column < len(row)):
                raise DataFormatError(
                    f"{path}: row {idx}: no column {column} in {len(row)} fields"
                )
            raw.append(row[column].strip())
    if not raw:
        raise DataFormatError(f"{path}: empty file")
    labels = _reindex_labels(raw)
    return LabelVector(labels, int(labels.max()) + 1)


def write_csv(ds: Dataset, path, delimiter: str = ",") -> None:
    """Inverse of load_csv: features at 17 significant digits, labels last."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        for i in range(ds.n):
            row = [format(x, ".17g") for x in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)


def make_blobs(
    seed: int,
    c: int,
    per_cluster: int,
    d: int,
    separation: float,
    spread: float,
) -> Dataset:
    """Gaussian blobs around c centers placed pairwise >= separation apart.

    Centers sit on the all-ones diagonal with consecutive gaps of exactly
    ``separation``, so every single coordinate separates the clusters by
    separation/sqrt(d); each cluster adds isotropic Gaussian noise of the
    given standard deviation.  Deterministic for a fixed seed.
    """
    if c < 1 or per_cluster < 1:
        raise ValueError("c and per_cluster must be >= 1")
    if separation <= 0 or spread < 0:
        raise ValueError("need separation > 0 and spread >= 0")
    rng = np.random.default_rng(seed)
    step = float(separation) / math.sqrt(d)
    centers = np.repeat(np.arange(c, dtype=np.float64)[:, np.newaxis] * step, d, axis=1)
    X = np.repeat(centers, per_cluster, axis=0)
    if spread > 0:
        X = X + rng.normal(0.0, spread, size=X.shape)
    labels = np.repeat(np.arange(c, dtype=np.int64), per_cluster)
    return Dataset(features=X, labels=labels, metric="euclidean", name=f"blobs-c{c}")


def save_code(code: SparseCode, path) -> None:
    """Write a SparseCode as a self-describing JSON container."""
    doc = {
        "format": "mbnet-code",
        "version": 1,
        "n": code.n,
        "blocks": [
            {
                "k": b.k,
                "V": b.V,
                "assignments": b.assignments.ravel().tolist(),
            }
            for b in code.blocks
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_code(path) -> SparseCode:
    """Read a SparseCode container; validates every block invariant."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != "mbnet-code":
        raise DataFormatError(f"{path}: not a code container")
    try:
        n = int(doc["n"])
        raw_blocks = doc["blocks"]
    except (KeyError, TypeError, ValueError) as e:
        raise DataFormatError(f"{path}: malformed container: {e}") from None
    if not isinstance(raw_blocks, list) or not raw_blocks:
        raise DataFormatError(f"{path}: container must hold at least one block")
    blocks = []
    for bi, rb in enumerate(raw_blocks):
        try:
            k = int(rb["k"])
            V = int(rb["V"])
            flat = np.asarray(rb["assignments"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as e:
            raise DataFormatError(f"{path}: block {bi} malformed: {e}") from None
        if flat.shape != (n * V,):
            raise DataFormatError(
                f"{path}: block {bi}: expected {n * V} assignments, got {flat.size}"
            )
        if flat.size and (flat.min() < 0 or flat.max() >= k):
            raise DataFormatError(
                f"{path}: block {bi}: assignment entries must lie in [0, {k})"
            )
        try:
            blocks.append(CodeBlock(k, flat.reshape(n, V)))
        except ValueError as e:
            raise DataFormatError(f"{path}: block {bi}: {e}") from None
    return SparseCode(tuple(blocks))

"""Encode points the network never saw during training.

Training is transductive: the model's own training set is what gets
encoded, and every clustering unit stores which training rows serve as
its centroids plus which feature columns it looks at.  That makes
out-of-sample encoding a two-step affair:

  1. assign each new point to the stored bottom-layer centroids, which
     needs the training features the row references point into;
  2. hand the resulting bottom code to encode(), which climbs the
     stored stack with the exact match-counting rule used in training.

A new point that duplicates a training row lands on exactly that row's
top-layer code.
"""

import numpy as np
from scipy.spatial.distance import cdist

from mbnet import (
    AhcConfig,
    CodeBlock,
    Dataset,
    LabelVector,
    MbnConfig,
    SparseCode,
    accuracy,
    ahc,
    encode,
    make_blobs,
    pca_sparse,
    train_bottom,
    train_mbn,
)

full = make_blobs(seed=19, c=3, per_cluster=50, d=5, separation=10.0, spread=1.0)
rng = np.random.default_rng(0)
holdout = np.zeros(full.n, dtype=bool)
holdout[rng.permutation(full.n)[:30]] = True

train_ds = Dataset(features=full.features[~holdout], labels=full.labels[~holdout])
new_X = full.features[holdout]
new_y = full.labels[holdout]

cfg = MbnConfig(delta=0.5, clusterings_per_layer=100, top_k=5, seed=3)
bottom = train_bottom(train_ds, cfg)
model = train_mbn(bottom, cfg)
print(f"trained on {train_ds.n} points, encoding {new_X.shape[0]} held-out points")


def bottom_encode(layer, train_X: np.ndarray, X: np.ndarray) -> SparseCode:
    """Assign rows of X to each unit's stored centroids (step 1).

    Plain argmin suffices here: ties have probability zero on
    continuous features.  Exact duplicates of training rows are the
    one practical tie source, and those can just reuse the training
    bottom code directly.
    """
    cols = np.empty((X.shape[0], layer.V), dtype=np.int16)
    for u, unit in enumerate(layer.units):
        cen = train_X[unit.centroid_rows][:, unit.feature_subset]
        cols[:, u] = cdist(X[:, unit.feature_subset], cen, "sqeuclidean").argmin(axis=1)
    return SparseCode((CodeBlock(layer.k, cols),))


new_code = encode(model, bottom_encode(model.bottom, train_ds.features, new_X))
print(f"held-out code: {new_code.n} rows, implicit dimension {new_code.implicit_dim}")

pred = ahc(pca_sparse(new_code), AhcConfig(c=3))
acc = accuracy(pred, LabelVector(new_y, 3)).acc
print(f"held-out clustering accuracy: {acc:.3f}")

# twin guarantee: re-encoding slices of the training bottom code gives
# back the matching slices of the training top code
rows = np.array([5, 40, 5])
twin = SparseCode((CodeBlock(bottom.k, bottom.output.assignments[rows]),))
out = encode(model, twin)
same = np.array_equal(out.blocks[0].assignments,
                      model.output_code.blocks[0].assignments[rows])
print(f"duplicated training rows reproduce their training codes: {same}")

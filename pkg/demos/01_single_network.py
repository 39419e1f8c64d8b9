"""Train one multilayer bootstrap network and inspect what it builds.

The network stacks layers of independent k-centroids clusterings.  Each
layer samples k data rows as centroids, assigns every point to its
nearest centroid, and emits the one-hot votes of all V clusterings as a
sparse binary code.  Layer sizes shrink geometrically by delta until
they hit the configured top size, so the code gets coarser, and more
invariant, with depth.
"""

from mbnet import (
    AhcConfig,
    LabelVector,
    MbnConfig,
    accuracy,
    ahc,
    make_blobs,
    pca_sparse,
    schedule_layers,
    train_bottom,
    train_mbn,
)

ds = make_blobs(seed=1, c=4, per_cluster=30, d=6, separation=12.0, spread=1.0)
print(f"dataset: {ds.n} points, {ds.d} dims, {ds.n_classes} clusters")

cfg = MbnConfig(delta=0.5, clusterings_per_layer=100, top_k=6, seed=42)

k1 = round(ds.n * cfg.bottom_fraction)
print(f"layer sizes from k1={k1} at delta={cfg.delta}: {schedule_layers(k1, cfg.delta, cfg.top_k)}")

bottom = train_bottom(ds, cfg)
model = train_mbn(bottom, cfg)
print(f"trained stack: {[layer.k for layer in model.layers]} (bottom k={model.bottom.k})")
print(f"top-layer code: {model.output_code.units_total} clusterings, "
      f"implicit dimension {model.output_code.implicit_dim}")

# the sparse code never becomes a dense matrix: PCA runs on its Gram matrix
emb = pca_sparse(model.output_code)
print(f"embedding: {emb.values.shape[1]} components")

pred = ahc(emb, AhcConfig(c=4))
acc = accuracy(pred, LabelVector(ds.labels, 4)).acc
print(f"clustering accuracy after average-linkage AHC: {acc:.3f}")

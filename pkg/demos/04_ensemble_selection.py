"""Pick the best base models out of an ensemble, three different ways.

Random deltas mean some base models are much better than others, and a
few can be bad enough to drag the meta-representation down.  Selection
ranks the models without ground truth:

  so   cluster the meta-embedding once, score each model's embedding
       against those labels with a validity criterion (needs the class
       count c)
  rso  cluster each model's own embedding, score the meta-embedding
       against each model's labels
  sd   rank models by divergence between their code distribution and
       the ensemble mixture (needs nothing at all)
"""

from mbnet import (
    AhcConfig,
    EnsembleConfig,
    LabelVector,
    MbnConfig,
    SelectionConfig,
    accuracy,
    ahc,
    make_blobs,
    meta_embedding,
    select,
    train_ensemble,
)

ds = make_blobs(seed=2, c=4, per_cluster=30, d=8, separation=3.2, spread=1.0)
base = MbnConfig(delta=0.5, clusterings_per_layer=80, top_k=6, seed=2)
ens = train_ensemble(ds, EnsembleConfig(base=base, n_models=10, seed=2))
truth = LabelVector(ds.labels, 4)


def acc_of(emb) -> float:
    return accuracy(ahc(emb, AhcConfig(c=4)), truth).acc


print(f"keep the whole ensemble:     {acc_of(meta_embedding(ens)):.3f}")

for mode in ("so", "rso", "sd"):
    cfg = SelectionConfig(
        mode=mode,
        criterion="VRC" if mode != "sd" else None,
        n_classes=4 if mode != "sd" else None,
        n_selected=3,
    )
    res = select(ens, cfg)
    kept = ", ".join(str(z) for z in res.chosen)
    print(f"{mode:>4} keeps models [{kept}]: {acc_of(res.selected_embedding):.3f}")

# the weights behind the 'sd' ranking, highest first
res = select(ens, SelectionConfig(mode="sd"))
print("\nsd weights per model (1 = closest to the mixture):")
for z in res.chosen:
    print(f"  model {z} (delta={ens.deltas[z]:.2f}): {res.weights[z]:.3f}")

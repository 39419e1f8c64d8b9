import numpy as np
import pytest

from mbnet import EnsembleConfig, MbnConfig, make_blobs, train_ensemble


@pytest.fixture(scope="session")
def blobs4():
    # 4 well-separated clusters, 25 points each
    return make_blobs(seed=7, c=4, per_cluster=25, d=3, separation=30.0, spread=1.0)


@pytest.fixture(scope="session")
def tiny_ensemble(blobs4):
    # small but real: 5 models, 40 clusterings per layer
    base = MbnConfig(delta=0.5, clusterings_per_layer=40, top_k=6, seed=13)
    cfg = EnsembleConfig(base=base, n_models=5, delta_range=(0.05, 0.95), seed=13)
    return train_ensemble(blobs4, cfg)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

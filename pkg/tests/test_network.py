import numpy as np
import pytest

from mbnet import (
    AhcConfig,
    ConfigError,
    Dataset,
    LabelVector,
    MbnConfig,
    accuracy,
    ahc,
    code_gram,
    encode,
    make_blobs,
    model_from_json,
    model_to_json,
    pca_sparse,
    schedule_layers,
    single_block_code,
    to_dense,
    train_bottom,
    train_layer,
    train_mbn,
)


class TestSchedule:
    def test_halving_schedule(self):
        assert schedule_layers(100, 0.5, 9) == [100, 50, 25, 13, 9]

    def test_aggressive_shrink_clamps_to_top(self):
        assert schedule_layers(100, 0.05, 9) == [100, 9]

    def test_slow_shrink_forces_strict_decrease(self):
        assert schedule_layers(10, 0.99, 9) == [10, 9]

    def test_start_at_or_below_top_rejected(self):
        with pytest.raises(ValueError, match="k1 > k_o"):
            schedule_layers(9, 0.5, 9)
        with pytest.raises(ValueError):
            schedule_layers(5, 0.5, 9)

    def test_random_schedules_decrease_and_end_at_top(self, rng):
        for _ in range(200):
            k_o = int(rng.integers(1, 30))
            k1 = int(rng.integers(k_o + 1, 500))
            delta = float(rng.uniform(0.01, 0.99))
            sizes = schedule_layers(k1, delta, k_o)
            assert sizes[0] == k1
            assert sizes[-1] == k_o
            assert all(a > b for a, b in zip(sizes, sizes[1:]))
            # only the last entry may sit at or below k_o
            assert all(s > k_o for s in sizes[:-1])


class TestTrainLayer:
    def test_every_point_its_own_centroid(self, rng):
        X = rng.normal(size=(12, 3))
        layer = train_layer(X, k=12, n_units=4, feature_ratio=1.0, key=9)
        for u, unit in enumerate(layer.units):
            got = unit.centroid_rows[layer.output.assignments[:, u]]
            assert np.array_equal(got, np.arange(12))

    def test_split_centroids_recover_blob_membership(self):
        ds = make_blobs(seed=2, c=2, per_cluster=10, d=3, separation=50, spread=0.5)
        layer = train_layer(ds, k=2, n_units=8, feature_ratio=1.0, key=4)
        blob = ds.labels
        for u, unit in enumerate(layer.units):
            rows = unit.centroid_rows
            if blob[rows[0]] == blob[rows[1]]:
                continue  # both centroids in one blob, membership unrecoverable
            got = blob[rows[layer.output.assignments[:, u]]]
            assert np.array_equal(got, blob)

    def test_same_key_same_layer(self, rng):
        X = rng.normal(size=(20, 4))
        a = train_layer(X, k=7, n_units=5, key=123)
        b = train_layer(X, k=7, n_units=5, key=123)
        assert a.equals(b)

    def test_different_key_different_draws(self, rng):
        X = rng.normal(size=(20, 4))
        a = train_layer(X, k=7, n_units=5, key=1)
        b = train_layer(X, k=7, n_units=5, key=2)
        assert not np.array_equal(a._centroids, b._centroids)

    def test_single_unit_full_k_is_lossless(self, rng):
        X = rng.normal(size=(9, 2))
        layer = train_layer(X, k=9, n_units=1, feature_ratio=1.0, key=0)
        G = code_gram(single_block_code(layer.k, layer.output.assignments))
        assert np.array_equal(G, np.eye(9, dtype=np.int64))

    def test_k_above_n_rejected(self, rng):
        with pytest.raises(ValueError, match="k must lie"):
            train_layer(rng.normal(size=(5, 2)), k=6, n_units=1)

    def test_multi_block_input_rejected(self, rng):
        from mbnet import CodeBlock, SparseCode

        code = SparseCode(
            (
                CodeBlock(2, rng.integers(0, 2, size=(6, 2))),
                CodeBlock(3, rng.integers(0, 3, size=(6, 2))),
            )
        )
        with pytest.raises(ValueError, match="single-block"):
            train_layer(code, k=2, n_units=1)

    def test_match_count_assignment_minimizes_binary_distance(self, rng):
        # all one-hot rows share the same norm, so max match count must
        # pick the same centroids as min euclidean distance on the
        # explicit expansion (up to ties at equal match count)
        prev = single_block_code(4, rng.integers(0, 4, size=(15, 10)))
        layer = train_layer(prev, k=5, n_units=6, feature_ratio=1.0, key=77)
        dense = to_dense(prev)
        for u, unit in enumerate(layer.units):
            cents = dense[unit.centroid_rows]
            matches = dense @ cents.T
            chosen = layer.output.assignments[:, u]
            best = matches.max(axis=1)
            assert np.array_equal(matches[np.arange(15), chosen], best)
            d2 = ((dense[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
            assert np.allclose(d2[np.arange(15), chosen], d2.min(axis=1))

    def test_feature_subsets_have_expected_size(self, rng):
        X = rng.normal(size=(30, 10))
        layer = train_layer(X, k=5, n_units=6, feature_ratio=0.5, key=3)
        for unit in layer.units:
            assert unit.feature_subset.shape[0] == 5

    def test_threaded_training_is_bit_identical(self, rng):
        X = rng.normal(size=(40, 6))
        a = train_layer(X, k=11, n_units=16, key=5, n_jobs=1)
        b = train_layer(X, k=11, n_units=16, key=5, n_jobs=4)
        assert a.equals(b)


class TestTrainMbn:
    def run_config(self, **kw):
        defaults = dict(delta=0.5, clusterings_per_layer=30, top_k=4, seed=11)
        defaults.update(kw)
        return MbnConfig(**defaults)

    def test_tiny_delta_gives_single_owned_layer(self, rng):
        ds = Dataset(rng.normal(size=(40, 3)))
        cfg = self.run_config(delta=0.05)
        bottom = train_bottom(ds, cfg)
        model = train_mbn(bottom, cfg)
        assert model.depth == 1
        assert model.layers[-1].k == 4

    def test_layer_ks_strictly_decrease(self, rng):
        ds = Dataset(rng.normal(size=(60, 3)))
        cfg = self.run_config(delta=0.6)
        model = train_mbn(train_bottom(ds, cfg), cfg)
        ks = [model.bottom.k] + [lay.k for lay in model.layers]
        assert all(a > b for a, b in zip(ks, ks[1:]))
        assert ks[1:] == schedule_layers(30, 0.6, 4)[1:]

    def test_seeded_training_repeats_exactly(self, rng):
        ds = Dataset(rng.normal(size=(30, 3)))
        cfg = self.run_config()
        a = train_mbn(train_bottom(ds, cfg), cfg)
        b = train_mbn(train_bottom(ds, cfg), cfg)
        assert a.equals(b)

    def test_missing_top_k_rejected(self, rng):
        ds = Dataset(rng.normal(size=(30, 3)))
        cfg = MbnConfig(clusterings_per_layer=10)
        bottom = train_bottom(ds, cfg)
        with pytest.raises(ConfigError, match="top_k"):
            train_mbn(bottom, cfg)

    def test_separable_blobs_reach_perfect_accuracy(self):
        ds = make_blobs(seed=9, c=3, per_cluster=25, d=3, separation=40, spread=1.0)
        cfg = MbnConfig(delta=0.5, clusterings_per_layer=100, top_k=5, seed=3)
        model = train_mbn(train_bottom(ds, cfg), cfg)
        emb = pca_sparse(model.output_code)
        pred = ahc(emb, AhcConfig(c=3))
        truth = LabelVector(ds.labels, 3)
        assert accuracy(pred, truth).acc == 1.0

    def test_threaded_stack_is_bit_identical(self, rng):
        ds = Dataset(rng.normal(size=(50, 4)))
        cfg = self.run_config()
        a = train_mbn(train_bottom(ds, cfg, n_jobs=1), cfg, n_jobs=1)
        b = train_mbn(train_bottom(ds, cfg, n_jobs=4), cfg, n_jobs=4)
        assert a.equals(b)


class TestEncode:
    def make_model(self, rng, n=36):
        ds = Dataset(rng.normal(size=(n, 3)))
        cfg = MbnConfig(delta=0.4, clusterings_per_layer=20, top_k=3, seed=21)
        bottom = train_bottom(ds, cfg)
        return train_mbn(bottom, cfg)

    def test_training_code_round_trips(self, rng):
        model = self.make_model(rng)
        out = encode(model, SparseCode_of(model))
        assert out.equals(model.output_code)

    def test_duplicate_point_gets_its_twin_code(self, rng):
        model = self.make_model(rng)
        bottom = model.bottom.output
        from mbnet import CodeBlock, SparseCode

        rows = np.array([3, 17, 3])
        sub = SparseCode((CodeBlock(bottom.k, bottom.assignments[rows]),))
        out = encode(model, sub)
        top = model.output_code.blocks[0].assignments
        assert np.array_equal(out.blocks[0].assignments, top[rows])

    def test_mismatched_shape_rejected(self, rng):
        model = self.make_model(rng)
        bottom = model.bottom.output
        from mbnet import CodeBlock, SparseCode

        wrong_v = SparseCode((CodeBlock(bottom.k, bottom.assignments[:, :-1]),))
        with pytest.raises(ValueError, match="does not match"):
            encode(model, wrong_v)

    def test_json_round_trip_preserves_model(self, rng):
        model = self.make_model(rng)
        back = model_from_json(model_to_json(model))
        assert back.equals(model)
        # round-tripped model encodes identically
        out = back.output_code
        assert out.equals(model.output_code)


def SparseCode_of(model):
    from mbnet import SparseCode

    return SparseCode((model.bottom.output,))

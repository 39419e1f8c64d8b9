import math

import numpy as np
import pytest

from mbnet import (
    CriterionScore,
    DegenerateCriterionError,
    LabelVector,
    criterion_fn,
    make_blobs,
    pb,
    pbm,
    swc,
    validity_diagnostics,
    vrc,
)

from oracles import pb_naive, pbm_naive, swc_naive, vrc_naive


def random_partition(rng, n, c):
    # every cluster nonempty
    lab = np.concatenate([np.arange(c), rng.integers(0, c, size=n - c)])
    rng.shuffle(lab)
    return LabelVector(lab, c)


PAIRS = [(swc, swc_naive), (pb, pb_naive), (pbm, pbm_naive), (vrc, vrc_naive)]


class TestOracleAgreement:
    @pytest.mark.parametrize("fn,naive", PAIRS, ids=["swc", "pb", "pbm", "vrc"])
    def test_matches_naive_loops(self, fn, naive):
        rng = np.random.default_rng(42)
        for _ in range(12):
            n = int(rng.integers(8, 26))
            d = int(rng.integers(1, 6))
            c = int(rng.integers(2, 5))
            Y = rng.normal(size=(n, d))
            labels = random_partition(rng, n, c)
            got = fn(labels, Y).value
            want = naive(labels.labels, Y)
            assert got == pytest.approx(want, rel=1e-9)


class TestSwc:
    def test_two_tight_pairs(self):
        Y = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
        labels = LabelVector([0, 0, 1, 1], 2)
        score = swc(labels, Y)
        # a = 1, b = (10 + sqrt(101)) / 2 for every point
        b = (10.0 + math.sqrt(101.0)) / 2.0
        assert score.value == pytest.approx((b - 1.0) / b)
        assert score.value == pytest.approx(0.90025, abs=5e-5)

    def test_singleton_contributes_zero(self):
        Y = np.array([[0.0], [5.0], [5.5], [6.0]])
        labels = LabelVector([0, 1, 1, 1], 2)
        diag = validity_diagnostics(labels, Y)
        assert diag.s[0] == 0.0

    def test_random_labels_on_one_blob_score_near_zero(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            Y = rng.normal(size=(40, 3))
            labels = random_partition(rng, 40, 3)
            assert abs(swc(labels, Y).value) < 0.15

    def test_value_bounded_by_one(self, rng):
        for _ in range(10):
            Y = rng.normal(size=(15, 2))
            labels = random_partition(rng, 15, 3)
            assert -1.0 <= swc(labels, Y).value <= 1.0


class TestPb:
    def test_two_singletons_score_zero(self):
        Y = np.array([[0.0, 0.0], [3.0, 4.0]])
        score = pb(LabelVector([0, 1], 2), Y)
        assert score.value == 0.0
        assert not score.degenerate

    def test_all_identical_points_degenerate(self):
        Y = np.zeros((4, 2))
        with pytest.raises(DegenerateCriterionError, match="PB"):
            pb(LabelVector([0, 0, 1, 1], 2), Y)

    def test_pair_counts_partition_all_pairs(self, rng):
        Y = rng.normal(size=(20, 3))
        labels = random_partition(rng, 20, 4)
        diag = validity_diagnostics(labels, Y)
        assert diag.w_d + diag.b_d == diag.t == 20 * 19 // 2

    def test_separated_clusters_beat_shuffled_labels(self):
        ds = make_blobs(seed=1, c=3, per_cluster=8, d=2, separation=30, spread=1.0)
        truth = LabelVector(ds.labels, 3)
        rng = np.random.default_rng(0)
        shuffled = LabelVector(rng.permutation(ds.labels), 3)
        assert pb(truth, ds.features).value > pb(shuffled, ds.features).value


class TestPbm:
    def test_mirrored_clusters_hand_value(self):
        Y = np.array([[-6.0, 0.0], [-4.0, 0.0], [4.0, 0.0], [6.0, 0.0]])
        labels = LabelVector([0, 0, 1, 1], 2)
        # E1 = 5, EK = 1, DK = 10, c = 2 -> ((1/2) * 5 * 10)^2
        assert pbm(labels, Y).value == pytest.approx(625.0)

    def test_quadratic_scale_homogeneity(self, rng):
        Y = rng.normal(size=(18, 3))
        labels = random_partition(rng, 18, 3)
        base = pbm(labels, Y).value
        for alpha in (0.5, 2.0, 7.0):
            assert pbm(labels, alpha * Y).value == pytest.approx(alpha**2 * base, rel=1e-9)

    def test_collapsed_clusters_degenerate_to_infinity(self):
        Y = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
        score = pbm(LabelVector([0, 0, 1, 1], 2), Y)
        assert score.degenerate
        assert math.isinf(score.value) and score.value > 0


class TestVrc:
    def test_truth_beats_random_labels(self):
        wins = 0
        for seed in range(20):
            ds = make_blobs(seed=seed, c=3, per_cluster=10, d=3, separation=25, spread=1.0)
            truth = LabelVector(ds.labels, 3)
            rng = np.random.default_rng(seed + 1000)
            rand = random_partition(rng, ds.n, 3)
            if vrc(truth, ds.features).value > vrc(rand, ds.features).value:
                wins += 1
        assert wins >= 19

    def test_scatter_decomposition_identity(self, rng):
        Y = rng.normal(size=(25, 4))
        labels = random_partition(rng, 25, 3)
        diag = validity_diagnostics(labels, Y)
        total = ((Y - Y.mean(axis=0)) ** 2).sum()
        assert diag.trace_w + diag.trace_b == pytest.approx(total, rel=1e-12)

    def test_zero_within_scatter_degenerate(self):
        Y = np.array([[0.0], [0.0], [9.0], [9.0]])
        score = vrc(LabelVector([0, 0, 1, 1], 2), Y)
        assert score.degenerate and math.isinf(score.value)

    def test_more_clusters_than_points_rejected(self):
        Y = np.eye(3)
        with pytest.raises(ValueError, match="n > c"):
            vrc(LabelVector([0, 1, 2], 3), Y)

    def test_scale_invariance(self, rng):
        Y = rng.normal(size=(20, 3))
        labels = random_partition(rng, 20, 4)
        base = vrc(labels, Y).value
        assert vrc(labels, 5.0 * Y).value == pytest.approx(base, rel=1e-9)


class TestSharedContracts:
    @pytest.mark.parametrize("fn", [swc, pb, pbm, vrc], ids=["swc", "pb", "pbm", "vrc"])
    def test_single_cluster_rejected(self, fn, rng):
        Y = rng.normal(size=(6, 2))
        with pytest.raises(DegenerateCriterionError, match="fewer than 2"):
            fn(LabelVector(np.zeros(6, dtype=np.int64), 1), Y)

    @pytest.mark.parametrize("fn", [swc, pb, pbm, vrc], ids=["swc", "pb", "pbm", "vrc"])
    def test_empty_cluster_rejected(self, fn, rng):
        Y = rng.normal(size=(6, 2))
        with pytest.raises(ValueError, match="empty cluster"):
            fn(LabelVector([0, 0, 0, 2, 2, 2], 3), Y)

    @pytest.mark.parametrize("fn", [swc, pb, pbm, vrc], ids=["swc", "pb", "pbm", "vrc"])
    def test_label_and_row_permutation_invariance(self, fn, rng):
        Y = rng.normal(size=(16, 3))
        labels = random_partition(rng, 16, 3)
        base = fn(labels, Y).value

        relabel = np.array([2, 0, 1])
        permuted_labels = LabelVector(relabel[labels.labels], 3)
        assert fn(permuted_labels, Y).value == pytest.approx(base, rel=1e-9)

        perm = rng.permutation(16)
        assert fn(
            LabelVector(labels.labels[perm], 3), Y[perm]
        ).value == pytest.approx(base, rel=1e-9)

    @pytest.mark.parametrize("fn", [swc, pb, pbm, vrc], ids=["swc", "pb", "pbm", "vrc"])
    def test_rotation_invariance(self, fn, rng):
        Y = rng.normal(size=(14, 3))
        labels = random_partition(rng, 14, 3)
        base = fn(labels, Y).value
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert fn(labels, Y @ Q).value == pytest.approx(base, rel=1e-9)

    @pytest.mark.parametrize("fn", [swc, pb], ids=["swc", "pb"])
    def test_uniform_scaling_invariance(self, fn, rng):
        Y = rng.normal(size=(14, 2))
        labels = random_partition(rng, 14, 3)
        base = fn(labels, Y).value
        assert fn(labels, 3.0 * Y).value == pytest.approx(base, rel=1e-9)


class TestApi:
    def test_lookup_is_case_insensitive(self):
        assert criterion_fn("vrc") is vrc
        assert criterion_fn("Swc") is swc

    def test_unknown_criterion_rejected(self):
        with pytest.raises(ValueError, match="unknown criterion"):
            criterion_fn("gap")

    def test_nonfinite_score_needs_degenerate_flag(self):
        with pytest.raises(ValueError, match="non-finite"):
            CriterionScore(value=math.inf, criterion="VRC")
        CriterionScore(value=math.inf, criterion="VRC", degenerate=True)

    def test_diagnostics_export(self, rng):
        Y = rng.normal(size=(10, 2))
        labels = random_partition(rng, 10, 2)
        doc = validity_diagnostics(labels, Y).to_json()
        assert doc["t"] == 45
        assert len(doc["s"]) == 10
        assert sum(doc["sizes"]) == 10

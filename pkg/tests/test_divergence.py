import numpy as np
import pytest

from mbnet import (
    CodeBlock,
    SparseCode,
    mmd_report,
    mmd_scores,
    mmd_scores_dense,
    mmd_weights,
    to_dense,
)

from oracles import mmd_naive


def model_stack(rng, z, n, k, v):
    """One SparseCode whose blocks play the role of Z model codes."""
    blocks = tuple(CodeBlock(k, rng.integers(0, k, size=(n, v))) for _ in range(z))
    return SparseCode(blocks)


def dense_views(code):
    return [to_dense(SparseCode((b,))) for b in code.blocks]


class TestScores:
    def test_hand_built_two_models_match_dense_oracle(self):
        a = CodeBlock(2, np.array([[0, 1], [0, 0], [1, 1], [1, 0]], dtype=np.int16))
        b = CodeBlock(2, np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.int16))
        code = SparseCode((a, b))
        for flag in (False, True):
            got = mmd_scores(code, include_constant=flag)
            want = mmd_naive(dense_views(code), include_constant=flag)
            assert np.allclose(got, want, atol=1e-9)

    def test_random_stacks_match_dense_oracle(self, rng):
        for _ in range(8):
            z = int(rng.integers(1, 4))
            n = int(rng.integers(2, 15))
            k = int(rng.integers(2, 5))
            v = int(rng.integers(1, 6))
            code = model_stack(rng, z, n, k, v)
            for flag in (False, True):
                got = mmd_scores(code, include_constant=flag)
                want = mmd_naive(dense_views(code), include_constant=flag)
                assert np.allclose(got, want, atol=1e-9)

    def test_identical_models_all_equal(self, rng):
        assign = rng.integers(0, 3, size=(8, 4))
        code = SparseCode(tuple(CodeBlock(3, assign) for _ in range(4)))
        v = mmd_scores(code)
        assert np.allclose(v, v[0])

    def test_constant_term_shifts_everything_equally(self, rng):
        code = model_stack(rng, 3, 10, 3, 4)
        off = mmd_scores(code, include_constant=False)
        on = mmd_scores(code, include_constant=True)
        shifts = on - off
        assert np.allclose(shifts, shifts[0])
        assert np.array_equal(np.argsort(off), np.argsort(on))

    def test_point_permutation_invariance(self, rng):
        code = model_stack(rng, 3, 9, 3, 4)
        perm = rng.permutation(9)
        permuted = SparseCode(
            tuple(CodeBlock(b.k, b.assignments[perm]) for b in code.blocks)
        )
        assert np.allclose(mmd_scores(code), mmd_scores(permuted), atol=1e-12)

    def test_works_on_a_trained_ensemble(self, tiny_ensemble):
        v = mmd_scores(tiny_ensemble)
        assert v.shape == (tiny_ensemble.n_models,)
        assert np.array_equal(v, mmd_scores(tiny_ensemble.meta_code))

    def test_matches_mean_reference_dense_route(self, rng):
        code = model_stack(rng, 3, 12, 4, 3)
        denses = dense_views(code)
        ref = np.mean(denses, axis=0)
        got = mmd_scores(code, include_constant=False)
        want = mmd_scores_dense(ref, denses)
        assert np.allclose(got, want, atol=1e-9)

    def test_mismatched_blocks_rejected(self, rng):
        code = SparseCode(
            (
                CodeBlock(3, rng.integers(0, 3, size=(6, 4))),
                CodeBlock(2, rng.integers(0, 2, size=(6, 4))),
            )
        )
        with pytest.raises(ValueError, match="one implicit space"):
            mmd_scores(code)

    def test_single_point_rejected(self, rng):
        code = model_stack(rng, 2, 1, 2, 3)
        with pytest.raises(ValueError, match="2 points"):
            mmd_scores(code)


class TestDenseScores:
    def test_shape_mismatch_rejected(self, rng):
        ref = rng.normal(size=(5, 3))
        with pytest.raises(ValueError, match="shape"):
            mmd_scores_dense(ref, [rng.normal(size=(5, 2))])

    def test_oracle_constant_shift_cross_check(self, rng):
        # shifting every vector of every sample by one common offset must
        # move all scores by the same amount; this pins down the oracle
        # itself, not the package
        Xs = [rng.normal(size=(6, 4)) for _ in range(3)]
        shift = rng.normal(size=4)
        base = mmd_naive(Xs)
        moved = mmd_naive([X + shift for X in Xs])
        deltas = moved - base
        assert np.allclose(deltas, deltas[0])


class TestWeights:
    def test_min_max_flip(self):
        assert np.allclose(mmd_weights(np.array([3.0, 1.0, 2.0])), [0.0, 1.0, 0.5])

    def test_all_equal_gives_ones(self):
        assert np.array_equal(mmd_weights(np.array([2.0, 2.0, 2.0])), [1.0, 1.0, 1.0])
        assert np.array_equal(mmd_weights(np.array([7.0])), [1.0])

    def test_smaller_score_means_larger_weight(self):
        assert np.allclose(mmd_weights(np.array([0.0, 10.0])), [1.0, 0.0])

    def test_bounds_and_extremes(self, rng):
        v = rng.normal(size=20)
        w = mmd_weights(v)
        assert w.min() == 0.0 and w.max() == 1.0
        assert np.all((w >= 0) & (w <= 1))
        assert w[np.argmin(v)] == 1.0 and w[np.argmax(v)] == 0.0


class TestReport:
    def test_report_fields_consistent(self, rng):
        code = model_stack(rng, 4, 8, 3, 3)
        rep = mmd_report(code)
        assert rep.reduced is True
        assert rep.v_min == rep.v.min() and rep.v_max == rep.v.max()
        assert np.allclose(rep.w, mmd_weights(rep.v))
        doc = rep.to_json()
        assert len(doc["v"]) == 4 and len(doc["w"]) == 4

    def test_full_report_not_reduced(self, rng):
        code = model_stack(rng, 2, 6, 2, 2)
        assert mmd_report(code, include_constant=True).reduced is False

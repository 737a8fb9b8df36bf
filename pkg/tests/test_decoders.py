import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from distill_parse.decoders import (
    as_score_matrix,
    brute_force_decode,
    cle_decode,
    decode,
    eisner_decode,
    enumerate_heads,
    enumerate_trees,
    tree_score,
)
from distill_parse.treebank import ParseTree, is_projective, tree_violation
from helpers import random_scores


class TestEnumeration:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 16), (4, 125), (5, 1296), (6, 16807)])
    def test_cayley_counts(self, n, count):
        assert len(enumerate_heads(n)) == count == (n + 1) ** (n - 1)

    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 12), (4, 55), (5, 273), (6, 1428)])
    def test_projective_counts(self, n, count):
        assert len(enumerate_heads(n, projective_only=True)) == count

    @pytest.mark.parametrize("n", range(1, 6))
    def test_single_root_counts(self, n):
        assert len(enumerate_heads(n, single_root=True)) == n ** (n - 1)

    def test_n2_by_hand(self):
        assert {t.heads for t in enumerate_trees(2)} == {(0, 0), (0, 1), (2, 0)}

    @pytest.mark.parametrize("n", range(1, 6))
    def test_all_distinct_and_valid(self, n):
        heads = enumerate_heads(n)
        assert len({tuple(h) for h in heads}) == len(heads)
        assert all(tree_violation(tuple(h)) is None for h in heads)

    def test_projective_filter(self):
        assert all(is_projective(tuple(h)) for h in enumerate_heads(5, projective_only=True))

    def test_guard(self):
        with pytest.raises(ValueError):
            enumerate_trees(9)


class TestTreeScore:
    def test_two_term_sum(self):
        s = np.zeros((3, 3))
        s[0, 1], s[1, 2] = 2.0, 3.0
        assert tree_score(s, ParseTree((0, 1))) == 5.0

    def test_single_word(self):
        s = np.zeros((2, 2))
        s[0, 1] = 7.0
        assert tree_score(s, (0,)) == 7.0

    def test_all_zero(self):
        assert tree_score(np.zeros((4, 4)), (0, 1, 1)) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tree_score(np.zeros((3, 3)), (0,))

    def test_rectangular_input_padded(self):
        s = np.arange(6.0).reshape(3, 2)  # (n+1, n) without the root column
        assert as_score_matrix(s).shape == (3, 3)
        assert tree_score(s, (0, 1)) == s[0, 0] + s[1, 1]


class TestDecoders:
    @pytest.mark.parametrize("fn", [eisner_decode, cle_decode])
    def test_single_word(self, fn):
        assert fn(np.array([[0.0, -4.0], [0.0, 0.0]])).heads == (0,)

    def test_cle_n2_fixture(self):
        s = np.zeros((3, 3))
        s[0, 1] = s[0, 2] = 1.0
        s[1, 2] = s[2, 1] = 5.0
        best, trees = brute_force_decode(s, single_root=False)
        out = cle_decode(s, single_root=False)
        assert best == 6.0 and tree_score(s, out) == best
        assert out.heads in {t.heads for t in trees}

    def test_cle_contracts_two_cycle(self):
        # greedy heads: 1 <- 2 and 2 <- 1 form a cycle; word 3 hangs off 1
        s = np.full((4, 4), -10.0)
        s[2, 1], s[1, 2] = 10.0, 9.0
        s[0, 1], s[0, 2] = 1.0, 3.0
        s[1, 3] = 4.0
        greedy = s[:, 1:].argmax(axis=0)
        assert greedy[0] == 2 and greedy[1] == 1
        best, _ = brute_force_decode(s)
        out = cle_decode(s)
        assert tree_score(s, out) == best
        assert out.heads == (2, 0, 1)

    def test_all_equal_scores_tie_break(self):
        s = np.ones((6, 6))
        assert eisner_decode(s).heads == (0, 1, 1, 1, 1)
        assert cle_decode(s).heads == (0, 1, 1, 1, 1)
        assert eisner_decode(s, single_root=False).heads == (0,) * 5
        assert cle_decode(s, single_root=False).heads == (0,) * 5

    @pytest.mark.parametrize("single_root", [True, False])
    def test_oracle_equivalence_small(self, single_root):
        rng = np.random.default_rng(11)
        for n in range(1, 6):
            for _ in range(20):
                s = random_scores(rng, n, integer=bool(rng.integers(2)))
                e_best, e_trees = brute_force_decode(s, projective_only=True, single_root=single_root)
                c_best, c_trees = brute_force_decode(s, projective_only=False, single_root=single_root)
                e, c = eisner_decode(s, single_root), cle_decode(s, single_root)
                assert tree_score(s, e) == e_best and e.heads in {t.heads for t in e_trees}
                assert tree_score(s, c) == c_best and c.heads in {t.heads for t in c_trees}

    def test_non_projective_optimum(self):
        # crossing arcs 3 -> 1 and 4 -> 2 are strongly preferred
        s = np.zeros((5, 5))
        s[3, 1] = s[4, 2] = s[0, 3] = s[3, 4] = 10.0
        assert cle_decode(s).heads == (3, 4, 0, 3)
        e = eisner_decode(s)
        assert e.is_projective() and tree_score(s, e) < 40.0

    def test_decode_dispatch(self):
        s = random_scores(np.random.default_rng(0), 4)
        assert decode(s, "eisner") == eisner_decode(s)
        assert decode(s, "mst") == cle_decode(s) == decode(s, "cle")
        with pytest.raises(ValueError):
            decode(s, "greedy")

    def test_large_sentence_is_valid(self):
        s = random_scores(np.random.default_rng(5), 60)
        for tree in (eisner_decode(s), cle_decode(s)):
            assert tree_violation(tree.heads) is None
            assert tree.heads.count(0) == 1
        assert eisner_decode(s).is_projective()
        assert tree_score(s, cle_decode(s)) >= tree_score(s, eisner_decode(s))

    def test_ignores_diagonal_and_root_column(self):
        rng = np.random.default_rng(2)
        s = random_scores(rng, 5)
        t = s.copy()
        t[:, 0] = 1e6
        t[np.diag_indices(6)] = 1e6
        assert eisner_decode(s) == eisner_decode(t)
        assert cle_decode(s) == cle_decode(t)


matrices = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n + 1, n + 1), elements=st.floats(-50, 50, allow_nan=False, width=32))
)


class TestDecoderProperties:
    @settings(max_examples=150, deadline=None)
    @given(matrices, st.booleans())
    def test_matches_brute_force(self, s, single_root):
        e_best, _ = brute_force_decode(s, projective_only=True, single_root=single_root)
        c_best, _ = brute_force_decode(s, projective_only=False, single_root=single_root)
        assert tree_score(s, eisner_decode(s, single_root)) == e_best
        assert tree_score(s, cle_decode(s, single_root)) == c_best

    @settings(max_examples=100, deadline=None)
    @given(matrices, st.sampled_from([0.5, 2.0, 4.0, 1024.0]))
    def test_scale_invariance(self, s, c):
        # power-of-two factors scale every sum exactly, so ties are preserved
        assert eisner_decode(s) == eisner_decode(c * s)
        assert cle_decode(s) == cle_decode(c * s)

    @settings(max_examples=100, deadline=None)
    @given(matrices)
    def test_outputs_are_trees(self, s):
        e, c = eisner_decode(s), cle_decode(s)
        assert tree_violation(e.heads) is None and e.is_projective()
        assert tree_violation(c.heads) is None
        assert e.heads.count(0) == 1 and c.heads.count(0) == 1

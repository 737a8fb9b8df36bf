import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distill_parse.costs import CostSpec, cost, hamming_cost
from distill_parse.decoders import enumerate_trees, tree_score
from distill_parse.ensemble import JackknifePlan, ModelRecord, VoteProvenance, tally_votes
from distill_parse.scorers import TrainingError, build_scorer
from distill_parse.synthetic import generate_treebank
from distill_parse.training import (
    EpochRecord,
    TrainConfig,
    cost_augmented_decode,
    decodable,
    hinge_loss,
    hinge_subgradient,
    parse_sentences,
    train,
)
from distill_parse.treebank import ParseTree, Sentence
from helpers import random_scores, random_tree, random_votes


def _augmented_oracle(scores, gold, spec, projective):
    best = None
    for t in enumerate_trees(len(gold), projective_only=projective, single_root=True):
        v = tree_score(scores, t) + cost(gold, t, spec)
        best = v if best is None else max(best, v)
    return best


class TestCostAugmentedDecode:
    def test_zero_scores_maximize_hamming(self):
        gold = ParseTree((2, 0, 2))
        spec = CostSpec("hamming")
        out = cost_augmented_decode(np.zeros((4, 4)), gold, spec)
        best = max(hamming_cost(gold, t) for t in enumerate_trees(3, projective_only=True, single_root=True))
        assert hamming_cost(gold, out) == best

    def test_separated_gold_is_returned(self):
        gold = ParseTree((2, 0, 2, 3))
        s = np.zeros((5, 5))
        for m, h in enumerate(gold.heads, start=1):
            s[h, m] = 10.0
        for decoder in ("eisner", "cle"):
            assert cost_augmented_decode(s, gold, CostSpec("hamming"), decoder).heads == gold.heads

    def test_unanimous_distillation_matches_hamming(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(1, 8))
            gold = random_tree(rng, n, single_root=True)
            s = random_scores(rng, n)
            votes = tally_votes([gold] * 4)
            for decoder in ("eisner", "cle"):
                a = cost_augmented_decode(s, gold, CostSpec("hamming"), decoder)
                b = cost_augmented_decode(s, gold, CostSpec("distillation", votes), decoder)
                assert a == b

    @pytest.mark.parametrize("kind", ["hamming", "distillation"])
    @pytest.mark.parametrize("decoder", ["eisner", "cle"])
    def test_brute_force(self, kind, decoder):
        rng = np.random.default_rng(21)
        for _ in range(25):
            n = int(rng.integers(1, 6))
            gold = random_tree(rng, n, single_root=True)
            if decoder == "eisner" and not gold.is_projective():
                continue
            spec = CostSpec(kind, random_votes(rng, n, int(rng.integers(1, 6))) if kind != "hamming" else None)
            s = random_scores(rng, n, integer=bool(rng.integers(2)))
            out = cost_augmented_decode(s, gold, spec, decoder)
            got = tree_score(s, out) + cost(gold, out, spec)
            assert got == _augmented_oracle(s, gold, spec, decoder == "eisner")


class TestHingeLoss:
    def test_margin_gives_zero(self):
        gold = ParseTree((0, 1, 2))
        s = np.zeros((4, 4))
        s[0, 1] = s[1, 2] = s[2, 3] = 5.0
        loss, witness = hinge_loss(s, gold, CostSpec("hamming"))
        assert loss == 0.0 and witness == gold

    def test_n2_by_enumeration(self):
        gold = ParseTree((0, 1))
        s = np.array([[0.0, 1.0, 0.5], [0.0, 0.0, 0.2], [0.0, 3.0, 0.0]])
        loss, _ = hinge_loss(s, gold, CostSpec("hamming"), "cle", single_root=False)
        trees = enumerate_trees(2)
        assert len(trees) == 3
        expect = max(tree_score(s, t) + hamming_cost(gold, t) for t in trees) - tree_score(s, gold)
        assert loss == pytest.approx(expect, abs=1e-12)
        assert loss == pytest.approx(4.3)  # tree (2, 0): 3.5 + 2 - 1.2

    def test_ensemble_preferred_error_still_costs(self):
        # word 2's gold head is 1, but the ensemble prefers the root: no cost margin,
        # yet the model scoring 0 -> 2 above 1 -> 2 still incurs loss
        gold = ParseTree((0, 1))
        votes = tally_votes([ParseTree((0, 0))] * 3 + [gold])
        spec = CostSpec("distillation", votes)
        s = np.zeros((3, 3))
        s[0, 1], s[1, 2], s[0, 2] = 2.0, 1.0, 1.5
        loss, witness = hinge_loss(s, gold, spec, "cle", single_root=False)
        assert witness.heads == (0, 0)
        assert cost(gold, witness, spec) == 0.0
        assert loss == pytest.approx(0.5)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.sampled_from(["hamming", "distillation"]))
    def test_properties(self, n, seed, kind):
        rng = np.random.default_rng(seed)
        gold = random_tree(rng, n, single_root=True)
        spec = CostSpec(kind, random_votes(rng, n, 3) if kind != "hamming" else None)
        s = random_scores(rng, n)
        loss, witness = hinge_loss(s, gold, spec, "cle")
        assert loss >= 0.0
        if loss == 0.0:
            assert tree_score(s, witness) + cost(gold, witness, spec) == pytest.approx(tree_score(s, gold), abs=1e-9)
        g = hinge_subgradient(witness, gold)
        assert (not g.any()) == (witness.heads == gold.heads)
        if witness.heads != gold.heads:
            assert g.sum() == 0.0 and g.min() == -1.0


def _tb(n=20, seed=3):
    return generate_treebank(n, seed=seed)


class TestTrain:
    def test_epoch_log(self):
        res = train(_tb(8), None, TrainConfig(variant="linear", epochs=3, learning_rate=0.01), dev=_tb(4, 9))
        text = res.log_text().splitlines()
        assert text[0] == "epoch, mean_loss, train_UAS, dev_UAS, lr"
        assert len(text) == 4
        assert text[1].startswith("0, ")
        assert res.best_model is not None

    def test_distillation_unanimous_identical(self):
        tb = _tb(15)
        votes = {s.sentence_id: tally_votes([s.gold] * 3) for s in tb}
        base = TrainConfig(variant="linear", epochs=3, learning_rate=0.01, seed=5)
        a = train(tb, None, base).model
        b = train(tb, votes, base.replace(cost="distill")).model
        assert a.params.tobytes() == b.params.tobytes()

    def test_loss_decreases_over_first_epoch(self):
        tb = _tb(12, 8)
        wins = 0
        for seed in range(20):
            cfg = TrainConfig(variant="linear", epochs=2, learning_rate=0.01, seed=seed, scorer={"init_scale": 0.1})
            h = train(tb, None, cfg).history
            wins += h[1].mean_loss <= h[0].mean_loss
        assert wins >= 18

    def test_distillation_requires_votes(self):
        with pytest.raises(ValueError, match="--votes"):
            train(_tb(3), None, TrainConfig(variant="linear", cost="distill"))

    def test_votes_must_cover(self):
        tb = _tb(3)
        votes = {tb[0].sentence_id: tally_votes([tb[0].gold])}
        with pytest.raises(ValueError, match="missing"):
            train(tb, votes, TrainConfig(variant="linear", cost="distill"))

    def test_leaking_votes_refused(self):
        tb = _tb(4)
        votes = {s.sentence_id: tally_votes([s.gold]) for s in tb}
        plan = JackknifePlan(2, {s.sentence_id: i % 2 for i, s in enumerate(tb)})
        models = {0: ModelRecord(0, 1, 0, frozenset({0, 1}))}
        prov = VoteProvenance(plan, models, {s.sentence_id: (0,) for s in tb})
        with pytest.raises(ValueError, match="leak"):
            train(tb, votes, TrainConfig(variant="linear", cost="distill"), provenance=prov)

    def test_non_projective_excluded_under_eisner(self, caplog):
        tb = _tb(5)
        nonproj = Sentence(("a", "b", "c", "d"), ("X",) * 4, ParseTree((3, 4, 0, 3)), "np")
        res = train(tb + [nonproj], None, TrainConfig(variant="linear", epochs=1))
        assert res.excluded == 1
        assert "excluding 1" in caplog.text
        assert train(tb + [nonproj], None, TrainConfig(variant="linear", epochs=1, decoder="cle")).excluded == 0

    def test_decodable(self):
        assert not decodable(ParseTree((0, 0)), "cle", True)
        assert decodable(ParseTree((0, 0)), "cle", False)
        assert not decodable(ParseTree((3, 4, 0, 3)), "eisner", True)

    def test_non_finite_scores_abort(self):
        tb = _tb(3)
        model = build_scorer("linear", tb)
        model.params[:] = np.nan
        with pytest.raises(TrainingError, match=f"non-finite.*{tb[0].sentence_id}"):
            train(tb, None, TrainConfig(variant="linear", epochs=1, shuffle=False), model=model)

    def test_best_model_earliest_tie(self):
        tb = _tb(10)
        res = train(tb, None, TrainConfig(variant="linear", epochs=6, learning_rate=0.05), dev=tb)
        uas = [r.dev_uas for r in res.history]
        first_best = uas.index(max(uas))
        snapshot = parse_sentences(res.best_model, tb)
        from distill_parse.evaluation import evaluate

        assert evaluate(tb, snapshot).uas == uas[first_best]

    def test_empty_treebank(self):
        with pytest.raises(ValueError):
            train([], None, TrainConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(cost="softmax")
        with pytest.raises(ValueError):
            TrainConfig(decoder="greedy")
        assert TrainConfig(cost="distill").cost == "distillation"

    def test_epoch_record_line(self):
        assert EpochRecord(2, 0.5, 90.0, None, 0.001).line() == "2, 0.500000, 90.0000, nan, 0.001"

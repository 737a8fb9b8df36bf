import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distill_parse.synthetic import generate_treebank
from helpers import random_heads
from distill_parse.treebank import (
    ConllError,
    EmbeddingTable,
    ParseTree,
    Sentence,
    TreeError,
    ValidationError,
    format_conll,
    is_projective,
    read_conll,
    read_embeddings,
    tree_violation,
    write_conll,
    write_embeddings,
)

JOHN_SAW = (
    "1\tJohn\t_\tNNP\tNNP\t_\t2\tnsubj\t_\t_\n"
    "2\tsaw\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n"
    "\n"
)


class TestParseTree:
    def test_valid_tree(self):
        t = ParseTree((2, 0), ("nsubj", "root"))
        assert list(t.arcs()) == [(2, 1), (0, 2)]
        assert len(t) == 2

    def test_default_labels_are_empty(self):
        assert ParseTree((0,)).labels == ("",)

    @pytest.mark.parametrize("heads", [(1,), (2, 1), (0, 3, 2), (0, 5)])
    def test_rejects_non_trees(self, heads):
        assert tree_violation(heads) is not None
        with pytest.raises(TreeError):
            ParseTree(heads)

    def test_label_length_checked(self):
        with pytest.raises(TreeError):
            ParseTree((0, 1), ("a",))

    def test_projectivity(self):
        assert is_projective((2, 0, 2))
        # arc 3 -> 1 crosses arc 4 -> 2
        assert not is_projective((3, 4, 0, 3))

    def test_with_labels_and_unlabeled(self):
        t = ParseTree((0, 1)).with_labels(["root", "obj"])
        assert t.labels == ("root", "obj")
        assert t.unlabeled().labels == ("", "")


class TestSentence:
    def test_empty_sentence_rejected(self):
        with pytest.raises(ValueError):
            Sentence((), ())

    def test_gold_length_must_match(self):
        with pytest.raises(ValueError):
            Sentence(("a", "b"), ("X", "Y"), ParseTree((0,)))


class TestReadConll:
    def test_two_line_block(self):
        [s] = read_conll(io.BytesIO(JOHN_SAW.encode()), "conllx")
        assert s.forms == ("John", "saw")
        assert s.tags == ("NNP", "VBD")
        assert s.gold.heads == (2, 0)
        assert s.gold.labels == ("nsubj", "root")

    def test_empty_input(self):
        assert read_conll(io.BytesIO(b""), "conllu") == []

    def test_non_integer_head_names_line(self):
        bad = JOHN_SAW.replace("\t0\troot", "\tx\troot")
        with pytest.raises(ConllError) as exc:
            read_conll(io.StringIO(bad), "conllx")
        assert exc.value.line == 2
        assert "line 2" in str(exc.value)

    def test_head_out_of_range(self):
        bad = JOHN_SAW.replace("\t2\tnsubj", "\t7\tnsubj")
        with pytest.raises(ValidationError):
            read_conll(io.StringIO(bad), "conllx")

    def test_non_tree_gold_rejected(self):
        bad = JOHN_SAW.replace("\t0\troot", "\t1\troot")
        with pytest.raises(ValidationError):
            read_conll(io.StringIO(bad), "conllx")

    def test_conllu_ranges_empty_nodes_and_ids(self):
        text = (
            "# sent_id = s-42\n"
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\t_\tAUX\tVBP\t_\t3\taux\t_\t_\n"
            "2\tn't\t_\tPART\tRB\t_\t3\tadvmod\t_\t_\n"
            "2.1\tghost\t_\tX\tX\t_\t_\t_\t_\t_\n"
            "3\tgo\t_\tVERB\tVB\t_\t0\troot\t_\t_\n\n"
        )
        [s] = read_conll(io.StringIO(text), "conllu")
        assert s.sentence_id == "s-42"
        assert s.forms == ("do", "n't", "go")
        assert s.gold.heads == (3, 3, 0)

    def test_missing_heads_give_no_gold(self):
        text = "1\ta\t_\tDT\tDT\t_\t_\t_\t_\t_\n\n"
        [s] = read_conll(io.StringIO(text), "conllx")
        assert s.gold is None

    def test_non_projective_gold_accepted(self):
        text = "".join(
            f"{i}\tw{i}\t_\tX\tX\t_\t{h}\tdep\t_\t_\n" for i, h in enumerate((3, 4, 0, 3), start=1)
        )
        [s] = read_conll(io.StringIO(text + "\n"), "conllx")
        assert not s.gold.is_projective()


class TestWriteConll:
    def test_round_trip_one_sentence(self):
        [s] = read_conll(io.StringIO(JOHN_SAW), "conllx")
        [back] = read_conll(io.BytesIO(write_conll([s], [s.gold], "conllx")), "conllx")
        assert (back.forms, back.tags, back.gold) == (s.forms, s.tags, s.gold)

    def test_zero_sentences(self):
        assert write_conll([], [], "conllu") == b""

    def test_count_mismatch(self):
        [s] = read_conll(io.StringIO(JOHN_SAW), "conllx")
        with pytest.raises(ValueError):
            write_conll([s], [s.gold, s.gold])

    def test_length_mismatch(self):
        [s] = read_conll(io.StringIO(JOHN_SAW), "conllx")
        with pytest.raises(ValueError):
            format_conll([s], [ParseTree((0,))])

    @pytest.mark.parametrize("fmt", ["conllx", "conllu"])
    def test_round_trip_synthetic(self, fmt):
        sents = generate_treebank(40, seed=3)
        back = read_conll(io.BytesIO(write_conll(sents, format=fmt)), fmt)
        assert [(b.forms, b.tags, b.gold) for b in back] == [(s.forms, s.tags, s.gold) for s in sents]
        if fmt == "conllu":
            assert [b.sentence_id for b in back] == [s.sentence_id for s in sents]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.data())
    def test_round_trip_property(self, n, seed, data):
        rng = np.random.default_rng(seed)
        heads = random_heads(rng, n)
        word = st.text(alphabet="abcdefgäöü", min_size=1, max_size=5)
        forms = tuple(data.draw(st.lists(word, min_size=n, max_size=n)))
        tags = tuple(data.draw(st.lists(st.sampled_from(["NN", "VB", ",", "PUNCT"]), min_size=n, max_size=n)))
        labels = tuple(data.draw(st.lists(st.sampled_from(["", "dep", "nsubj:pass"]), min_size=n, max_size=n)))
        s = Sentence(forms, tags, ParseTree(heads, labels), "x1")
        [back] = read_conll(io.BytesIO(write_conll([s], format="conllu")), "conllu")
        assert (back.forms, back.tags, back.gold) == (s.forms, s.tags, s.gold)


class TestEmbeddings:
    def test_two_entries(self):
        t = read_embeddings(io.StringIO("a 1 2 3\nb 4 5 6\n"))
        assert t.dimension == 3 and len(t) == 2

    def test_header_skipped(self):
        t = read_embeddings(io.StringIO("2 3\na 1 2 3\nb 4 5 6\n"))
        assert t.dimension == 3 and len(t) == 2

    def test_dimension_mismatch_names_line(self):
        with pytest.raises(ConllError) as exc:
            read_embeddings(io.StringIO("a 1 2 3\nb 4 5 6 7\n"))
        assert exc.value.line == 2

    def test_unk_is_mean(self):
        t = read_embeddings(io.StringIO("a 1 2 3\nb 3 4 5\n"))
        np.testing.assert_array_equal(t.lookup("zzz"), [2.0, 3.0, 4.0])

    def test_round_trip(self):
        t = EmbeddingTable(2, {"x": np.array([0.1, -2.5]), "y": np.array([1e-9, 3.0])})
        back = read_embeddings(io.BytesIO(write_embeddings(t)))
        for k in t.entries:
            np.testing.assert_array_equal(back.lookup(k), t.lookup(k))

"""Seeded toy treebank generator driven by head rules.

Sentences are built top-down (clause -> subject, verb, object, prepositional
phrases) and linearized, so every tree is projective with a single root. The
one real ambiguity is prepositional-phrase attachment after a verb's object:
each (verb, preposition) and (noun, preposition) pair gets a fixed random
affinity, the PP goes to the higher-affinity head, and ``pp_noise`` flips that
choice at random.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .treebank import EmbeddingTable, ParseTree, Sentence

DETERMINERS = ["the", "a", "this", "every", "some", "that"]
PREPOSITIONS = ["with", "on", "in", "at", "from", "near", "for", "by", "about", "under"]
ADVERBS = ["quickly", "often", "rarely", "quietly", "never", "again", "slowly", "soon"]
PRONOUNS = ["he", "she", "they", "it", "we"]


def _words(prefix: str, n: int) -> list:
    syll = ["ka", "lo", "mi", "ren", "to", "su", "bar", "vel", "dun", "pi", "zo", "fe"]
    out = []
    i = 0
    while len(out) < n:
        a, b = divmod(i, len(syll))
        out.append(prefix + syll[a % len(syll)] + syll[b])
        i += 1
    return out


@dataclass
class _Node:
    form: str
    tag: str
    label: str
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)


@dataclass
class Grammar:
    """Lexicon plus the fixed attachment affinities."""

    seed: int = 0
    n_nouns: int = 40
    n_verbs: int = 16
    n_adjectives: int = 12

    def __post_init__(self):
        rng = random.Random(self.seed)
        self.nouns = _words("n", self.n_nouns)
        self.verbs = _words("v", self.n_verbs)
        self.adjectives = _words("j", self.n_adjectives)
        self.affinity = {}
        for head in self.nouns + self.verbs:
            for p in PREPOSITIONS:
                self.affinity[(head, p)] = rng.random()


def _noun_phrase(rng: random.Random, g: Grammar, label: str, pp_depth: int, pp_prob: float) -> _Node:
    if rng.random() < 0.15 and label == "nsubj":
        return _Node(rng.choice(PRONOUNS), "PRP", label)
    noun = _Node(rng.choice(g.nouns), "NN", label)
    noun.left.append(_Node(rng.choice(DETERMINERS), "DT", "det"))
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        noun.left.append(_Node(rng.choice(g.adjectives), "JJ", "amod"))
    if pp_depth > 0 and rng.random() < pp_prob * 0.5:
        noun.right.append(_prep_phrase(rng, g, pp_depth - 1, pp_prob))
    return noun


def _prep_phrase(rng, g, pp_depth, pp_prob) -> _Node:
    prep = _Node(rng.choice(PREPOSITIONS), "IN", "prep")
    prep.right.append(_noun_phrase(rng, g, "pobj", pp_depth, pp_prob))
    return prep


def _clause(rng: random.Random, g: Grammar, pp_prob: float, pp_noise: float, label: str) -> _Node:
    verb = _Node(rng.choice(g.verbs), "VB", label)
    verb.left.append(_noun_phrase(rng, g, "nsubj", 0, pp_prob))
    if rng.random() < 0.3:
        verb.left.append(_Node(rng.choice(ADVERBS), "RB", "advmod"))
    obj = _noun_phrase(rng, g, "dobj", 0, pp_prob)
    verb.right.append(obj)
    for _ in range(2):
        if rng.random() >= pp_prob:
            break
        pp = _prep_phrase(rng, g, 0, pp_prob)
        p = pp.form
        to_verb = g.affinity[(verb.form, p)] > g.affinity[(obj.form, p)]
        if rng.random() < pp_noise:
            to_verb = not to_verb
        if to_verb:
            verb.right.append(pp)
        else:
            obj.right.append(pp)
    if rng.random() < 0.2:
        verb.right.append(_Node(rng.choice(ADVERBS), "RB", "advmod"))
    return verb


def _linearize(root: _Node):
    forms, tags, heads, labels = [], [], [], []

    def visit(node: _Node, head: int) -> int:
        left_idx = []
        for child in node.left:
            left_idx.append(visit(child, -1))
        forms.append(node.form)
        tags.append(node.tag)
        heads.append(head)
        labels.append(node.label)
        me = len(forms)
        for i in left_idx:
            heads[i - 1] = me
        for child in node.right:
            visit(child, me)
        return me

    visit(root, 0)
    return forms, tags, heads, labels


def generate_sentence(
    rng: random.Random,
    grammar: Grammar,
    pp_prob: float = 0.6,
    pp_noise: float = 0.0,
    coord_prob: float = 0.15,
    sentence_id: str = "",
) -> Sentence:
    root = _clause(rng, grammar, pp_prob, pp_noise, "root")
    if rng.random() < coord_prob:
        root.right.append(_Node(",", ",", "punct"))
        root.right.append(_Node("and", "CC", "cc"))
        root.right.append(_clause(rng, grammar, pp_prob, pp_noise, "conj"))
    root.right.append(_Node(".", ".", "punct"))
    forms, tags, heads, labels = _linearize(root)
    return Sentence(tuple(forms), tuple(tags), ParseTree(tuple(heads), tuple(labels)), sentence_id)


def generate_treebank(
    n_sentences: int,
    seed: int = 0,
    grammar: Optional[Grammar] = None,
    pp_prob: float = 0.6,
    pp_noise: float = 0.0,
    coord_prob: float = 0.15,
    prefix: str = "syn",
) -> list:
    """``n_sentences`` sentences; the grammar (lexicon, affinities) comes from ``grammar``
    or, if omitted, from ``Grammar(seed=0)`` so that differently seeded treebanks share it."""
    g = grammar or Grammar(0)
    rng = random.Random(seed)
    return [
        generate_sentence(rng, g, pp_prob, pp_noise, coord_prob, f"{prefix}{seed}-{i + 1}")
        for i in range(n_sentences)
    ]


def toy_embeddings(grammar: Optional[Grammar] = None, dimension: int = 8, seed: int = 0) -> EmbeddingTable:
    """Random vectors clustered by word class, standing in for pretrained embeddings."""
    g = grammar or Grammar(0)
    rng = np.random.default_rng(seed)
    classes = {
        "NN": g.nouns, "VB": g.verbs, "JJ": g.adjectives, "DT": DETERMINERS,
        "IN": PREPOSITIONS, "RB": ADVERBS, "PRP": PRONOUNS,
    }
    entries = {}
    for words in classes.values():
        centre = rng.normal(0.0, 1.0, dimension)
        for w in words:
            entries[w] = centre + rng.normal(0.0, 0.3, dimension)
    return EmbeddingTable(dimension, entries)

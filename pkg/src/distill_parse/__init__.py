"""First-order dependency parsing with ensemble distillation.

Arc-factored decoders (Eisner, Chu-Liu-Edmonds), ensemble MBR consensus,
Hamming and distillation costs, structured hinge training of linear and
BiLSTM arc scorers, jackknifed ensemble votes and attachment-score evaluation.
"""

from .costs import CostSpec, cost, distillation_cost, hamming_cost, per_arc_cost
from .decoders import brute_force_decode, cle_decode, decode, eisner_decode, enumerate_trees, tree_score
from .ensemble import (
    JackknifePlan,
    VoteTable,
    build_training_votes,
    consensus,
    jackknife_split,
    mbr_parse,
    read_votes,
    tally_votes,
    write_votes,
)
from .evaluation import EvalReport, evaluate
from .scorers import BiLSTMScorer, LinearScorer, build_scorer, load_model
from .training import TrainConfig, cost_augmented_decode, hinge_loss, parse_sentences, train
from .treebank import ParseTree, Sentence, read_conll, read_embeddings, write_conll

__version__ = "0.1.0"

__all__ = [
    "BiLSTMScorer",
    "CostSpec",
    "EvalReport",
    "JackknifePlan",
    "LinearScorer",
    "ParseTree",
    "Sentence",
    "TrainConfig",
    "VoteTable",
    "brute_force_decode",
    "build_scorer",
    "build_training_votes",
    "cle_decode",
    "consensus",
    "cost",
    "cost_augmented_decode",
    "decode",
    "distillation_cost",
    "eisner_decode",
    "enumerate_trees",
    "evaluate",
    "hamming_cost",
    "hinge_loss",
    "jackknife_split",
    "load_model",
    "mbr_parse",
    "parse_sentences",
    "per_arc_cost",
    "read_conll",
    "read_embeddings",
    "read_votes",
    "tally_votes",
    "train",
    "tree_score",
    "write_conll",
    "write_votes",
]

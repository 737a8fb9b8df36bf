"""Arc scoring models: a sparse linear scorer and a BiLSTM scorer."""

from .base import ScorerModel, Vocab, load_model
from .bilstm import BiLSTMScorer
from .linear import LinearScorer, arc_features
from .optim import OptimizerState, TrainingError, adam_step

VARIANTS = {"linear": LinearScorer, "bilstm": BiLSTMScorer}


def build_scorer(variant, sentences, config=None, embeddings=None) -> ScorerModel:
    if variant == "linear":
        return LinearScorer.build(sentences, config)
    if variant == "bilstm":
        return BiLSTMScorer.build(sentences, config, embeddings)
    raise ValueError(f"unknown scorer variant {variant!r}")


def score_arcs(model: ScorerModel, sentence):
    return model.score_arcs(sentence)


def score_labels(model: ScorerModel, sentence, tree):
    return model.score_labels(sentence, tree)


def backward(model: ScorerModel, sentence, d_scores):
    return model.backward(sentence, d_scores)


__all__ = [
    "BiLSTMScorer",
    "LinearScorer",
    "OptimizerState",
    "ScorerModel",
    "TrainingError",
    "VARIANTS",
    "Vocab",
    "adam_step",
    "arc_features",
    "backward",
    "build_scorer",
    "load_model",
    "score_arcs",
    "score_labels",
]

"""Structured hinge training with Hamming or distillation cost."""

from __future__ import annotations

import dataclasses
import logging
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .costs import CostSpec, per_arc_cost
from .decoders import decode, tree_score
from .evaluation import evaluate
from .scorers import OptimizerState, ScorerModel, TrainingError, adam_step, build_scorer
from .treebank import ParseTree, Sentence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    ``scorer`` holds variant-specific settings (dimensions for ``bilstm``,
    ``init_scale`` for ``linear``); the model seed is always ``seed``.
    """

    cost: str = "hamming"
    decoder: str = "eisner"
    single_root: bool = True
    variant: str = "bilstm"
    epochs: int = 10
    seed: int = 0
    shuffle: bool = True
    learning_rate: float = 1e-3
    decay: float = 0.05
    decay_mode: str = "inverse"
    label_loss: bool = True
    scorer: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "cost", {"distill": "distillation"}.get(self.cost, self.cost))
        if self.cost not in ("hamming", "distillation"):
            raise ValueError(f"unknown cost {self.cost!r}")
        if self.decoder not in ("eisner", "cle"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    train_uas: float
    dev_uas: Optional[float]
    lr: float

    def line(self) -> str:
        dev = "nan" if self.dev_uas is None else f"{self.dev_uas:.4f}"
        return f"{self.epoch}, {self.mean_loss:.6f}, {self.train_uas:.4f}, {dev}, {self.lr:.6g}"


@dataclass
class TrainResult:
    model: ScorerModel
    best_model: Optional[ScorerModel]
    history: list
    excluded: int = 0

    def log_text(self) -> str:
        head = "epoch, mean_loss, train_UAS, dev_UAS, lr"
        return "\n".join([head] + [r.line() for r in self.history]) + "\n"


def cost_augmented_decode(scores, gold: ParseTree, spec: CostSpec, decoder: str = "eisner", single_root: bool = True):
    """Tree maximizing model score plus cost against ``gold``."""
    aug = np.asarray(scores, dtype=np.float64) + per_arc_cost(gold, spec)
    return decode(aug, decoder, single_root)


def hinge_loss(scores, gold: ParseTree, spec: CostSpec, decoder: str = "eisner", single_root: bool = True):
    """``max_y' [S(y') + C(y', gold)] - S(gold)`` and the maximizing ``y'``."""
    scores = np.asarray(scores, dtype=np.float64)
    witness = cost_augmented_decode(scores, gold, spec, decoder, single_root)
    aug = scores + per_arc_cost(gold, spec)
    loss = tree_score(aug, witness) - tree_score(scores, gold)
    return max(loss, 0.0), witness


def hinge_subgradient(witness: ParseTree, gold: ParseTree) -> np.ndarray:
    """Subgradient of the hinge loss w.r.t. the score matrix: witness arcs minus gold arcs."""
    n = len(gold)
    g = np.zeros((n + 1, n + 1))
    m = np.arange(1, n + 1)
    np.add.at(g, (np.asarray(witness.heads), m), 1.0)
    np.add.at(g, (np.asarray(gold.heads), m), -1.0)
    return g


def decodable(tree: ParseTree, decoder: str, single_root: bool) -> bool:
    """Whether ``decoder`` can output ``tree`` at all."""
    if single_root and tree.heads.count(0) != 1:
        return False
    return decoder != "eisner" or tree.is_projective()


def parse_sentences(model: ScorerModel, sentences: Sequence[Sentence], decoder: str = "eisner", single_root: bool = True) -> list:
    """Decode and label each sentence with ``model``."""
    out = []
    for s in sentences:
        cache = model.forward(s)
        tree = decode(cache.scores, decoder, single_root)
        out.append(tree.with_labels(model.score_labels(s, tree)))
    return out


def _check_votes(treebank, votes, provenance):
    if votes is None:
        raise ValueError("distillation cost needs votes (--votes) covering every training sentence")
    missing = [s.sentence_id for s in treebank if s.sentence_id not in votes]
    if missing:
        raise ValueError(f"votes missing for {len(missing)} sentences, e.g. {missing[0]!r}")
    for s in treebank:
        if votes[s.sentence_id].n != len(s):
            raise ValueError(f"vote table for {s.sentence_id!r} covers {votes[s.sentence_id].n} words, sentence has {len(s)}")
    if provenance is not None:
        leaks = provenance.leaks()
        if leaks:
            sid, mid = leaks[0]
            raise ValueError(
                f"votes leak training data: model {mid} voted on {sid!r} but was trained on its fold "
                f"({len(leaks)} leaking votes)"
            )


def train(
    treebank: Sequence[Sentence],
    votes: Optional[Mapping] = None,
    config: TrainConfig = TrainConfig(),
    dev: Optional[Sequence[Sentence]] = None,
    embeddings=None,
    provenance=None,
    model: Optional[ScorerModel] = None,
) -> TrainResult:
    """Train an arc scorer (and its labeler) with per-sentence Adam updates.

    Sentences whose gold tree the decoder cannot produce are skipped and
    counted. With a dev set, ``best_model`` is the snapshot with the best dev
    UAS (earliest epoch on ties).
    """
    if not treebank:
        raise ValueError("empty training treebank")
    if any(s.gold is None for s in treebank):
        raise ValueError("every training sentence needs a gold tree")
    if config.cost == "distillation":
        _check_votes(treebank, votes, provenance)

    usable = [s for s in treebank if decodable(s.gold, config.decoder, config.single_root)]
    excluded = len(treebank) - len(usable)
    if excluded:
        logger.warning("excluding %d sentences the %s decoder cannot produce", excluded, config.decoder)
    if not usable:
        raise ValueError("no training sentence is decodable")

    if model is None:
        scfg = dict(config.scorer)
        scfg["seed"] = config.seed
        model = build_scorer(config.variant, usable, scfg, embeddings)
    state = OptimizerState.fresh(
        model.size, learning_rate=config.learning_rate, decay=config.decay, decay_mode=config.decay_mode
    )
    rng = random.Random(config.seed)
    specs = {}
    for s in usable:
        if config.cost == "hamming":
            specs[s.sentence_id] = CostSpec("hamming")
        else:
            specs[s.sentence_id] = CostSpec("distillation", votes[s.sentence_id])

    history = []
    best, best_uas = None, -1.0
    order = list(range(len(usable)))
    for epoch in range(config.epochs):
        state.epoch = epoch
        if config.shuffle:
            rng.shuffle(order)
        total_loss = 0.0
        correct = tokens = 0
        for idx in order:
            s = usable[idx]
            spec = specs[s.sentence_id]
            cache = model.forward(s, label_heads=s.gold.heads if config.label_loss else None)
            if not np.isfinite(cache.scores).all():
                raise TrainingError(f"non-finite arc scores on sentence {s.sentence_id!r}")
            loss, witness = hinge_loss(cache.scores, s.gold, spec, config.decoder, config.single_root)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss on sentence {s.sentence_id!r}")
            total_loss += loss
            plain = decode(cache.scores, config.decoder, config.single_root)
            correct += sum(a == b for a, b in zip(plain.heads, s.gold.heads))
            tokens += len(s)
            d_scores = hinge_subgradient(witness, s.gold) if witness.heads != s.gold.heads else None
            d_labels = None
            if config.label_loss and len(model.labels):
                _, d_labels = model.label_loss(cache.label_logits, s.gold.labels)
            if d_scores is None and d_labels is None:
                continue
            if d_scores is None:
                d_scores = np.zeros_like(cache.scores)
            try:
                grad = model.backward(s, d_scores, cache, d_labels)
                adam_step(state, model.params, grad)
            except TrainingError as exc:
                raise TrainingError(f"sentence {s.sentence_id!r}: {exc}") from exc
        dev_uas = None
        if dev:
            dev_uas = evaluate(dev, parse_sentences(model, dev, config.decoder, config.single_root)).uas
            if dev_uas > best_uas:
                best, best_uas = model.copy(), dev_uas
        rec = EpochRecord(epoch, total_loss / len(usable), 100.0 * correct / tokens, dev_uas, state.rate())
        history.append(rec)
        logger.info("epoch %s", rec.line())
    return TrainResult(model, best, history, excluded)

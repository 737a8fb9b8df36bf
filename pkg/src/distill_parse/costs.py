"""Unlabeled cost functions between a gold tree and a candidate tree.

Both costs decompose over modifiers, so each has an arc matrix ``A`` with
``cost(gold, pred) == tree_score(A, pred)``; that matrix is what cost-augmented
decoding adds to the model scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .treebank import ParseTree

COST_KINDS = ("hamming", "distillation")


@dataclass(frozen=True)
class CostSpec:
    kind: str = "hamming"
    votes: Optional[object] = None  # a VoteTable; required for distillation

    def __post_init__(self):
        kind = {"distill": "distillation"}.get(self.kind, self.kind)
        if kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "distillation" and self.votes is None:
            raise ValueError("distillation cost needs a vote table")


def _check_lengths(gold: ParseTree, pred: ParseTree):
    if len(gold) != len(pred):
        raise ValueError(f"trees differ in length ({len(gold)} vs {len(pred)})")


def hamming_cost(gold: ParseTree, pred: ParseTree) -> float:
    """Number of words whose head differs."""
    _check_lengths(gold, pred)
    return float(sum(g != p for g, p in zip(gold.heads, pred.heads)))


def _posteriors(votes, n: int) -> np.ndarray:
    p = votes.posteriors()
    if p.shape != (n + 1, n + 1):
        raise ValueError(f"vote table covers {p.shape[0] - 1} words, trees have {n}")
    return p


def distillation_terms(gold: ParseTree, pred: ParseTree, votes) -> np.ndarray:
    """Per-modifier costs ``max(0, p(gold head, m) - p(predicted head, m))``."""
    _check_lengths(gold, pred)
    n = len(gold)
    p = _posteriors(votes, n)
    m = np.arange(1, n + 1)
    diff = p[np.asarray(gold.heads), m] - p[np.asarray(pred.heads), m]
    return np.maximum(0.0, diff)


def distillation_cost(gold: ParseTree, pred: ParseTree, votes) -> float:
    """Hamming cost discounted by the ensemble's attachment posteriors."""
    return math.fsum(distillation_terms(gold, pred, votes))


def cost(gold: ParseTree, pred: ParseTree, spec: CostSpec) -> float:
    if spec.kind == "hamming":
        return hamming_cost(gold, pred)
    return distillation_cost(gold, pred, spec.votes)


def per_arc_cost(gold: ParseTree, spec: CostSpec) -> np.ndarray:
    """``(n + 1, n + 1)`` matrix of each arc's cost contribution against ``gold``.

    Column 0 and the diagonal are zero and never read by the decoders.
    """
    n = len(gold)
    g = np.asarray(gold.heads)
    m = np.arange(1, n + 1)
    a = np.zeros((n + 1, n + 1))
    if spec.kind == "hamming":
        a[:, 1:] = 1.0
        a[g, m] = 0.0
    else:
        p = _posteriors(spec.votes, n)
        a[:, 1:] = np.maximum(0.0, p[g, m][None, :] - p[:, 1:])
    a[np.diag_indices(n + 1)] = 0.0
    return a

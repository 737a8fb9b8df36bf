"""Attachment scores (UAS, LAS) and unlabeled exact match."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .treebank import ParseTree, Sentence

# Tags counted as punctuation by default (PTB / CTB / UD conventions).
PUNCT_TAGS = {
    "english": frozenset({"``", "''", ":", ",", "."}),
    "ud": frozenset({"PUNCT"}),
    "chinese": frozenset({"PU"}),
    "german": frozenset({"$.", "$,", "$("}),
}
DEFAULT_PUNCT_TAGS = frozenset().union(*PUNCT_TAGS.values())


@dataclass(frozen=True)
class EvalReport:
    uas: float
    las: float
    uem: float
    counted_tokens: int
    excluded_tokens: int
    sentences: int

    def as_text(self) -> str:
        return (
            f"UAS   {self.uas:7.2f}\n"
            f"LAS   {self.las:7.2f}\n"
            f"UEM   {self.uem:7.2f}\n"
            f"tokens counted   {self.counted_tokens}\n"
            f"tokens excluded  {self.excluded_tokens}\n"
            f"sentences        {self.sentences}\n"
        )

    def as_keyvalue(self) -> str:
        return (
            f"uas={self.uas:.4f}\nlas={self.las:.4f}\nuem={self.uem:.4f}\n"
            f"counted_tokens={self.counted_tokens}\nexcluded_tokens={self.excluded_tokens}\n"
            f"sentences={self.sentences}\n"
        )


def evaluate(
    gold: Sequence[Sentence],
    pred: Sequence[ParseTree],
    punctuation: str = "include",
    punct_tags: Optional[Iterable[str]] = None,
    uem_all_tokens: bool = True,
) -> EvalReport:
    """Score predicted trees against the gold trees of ``gold``.

    With ``punctuation="exclude"``, tokens whose gold tag is in ``punct_tags``
    are left out of UAS/LAS. Exact match looks at every token unless
    ``uem_all_tokens`` is False.
    """
    if punctuation not in ("include", "exclude"):
        raise ValueError(f"punctuation must be 'include' or 'exclude', not {punctuation!r}")
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predictions")
    punct = frozenset(DEFAULT_PUNCT_TAGS if punct_tags is None else punct_tags)
    counted = excluded = head_ok = label_ok = exact = 0
    for i, (sent, tree) in enumerate(zip(gold, pred)):
        if sent.gold is None:
            raise ValueError(f"gold sentence {i + 1} has no tree")
        if len(tree) != len(sent):
            raise ValueError(f"prediction {i + 1} has {len(tree)} words, gold has {len(sent)}")
        g = sent.gold
        match = True
        for tag, gh, gl, ph, pl in zip(sent.tags, g.heads, g.labels, tree.heads, tree.labels):
            is_punct = punctuation == "exclude" and tag in punct
            if gh != ph and (uem_all_tokens or not is_punct):
                match = False
            if is_punct:
                excluded += 1
                continue
            counted += 1
            if gh == ph:
                head_ok += 1
                if gl == pl:
                    label_ok += 1
        exact += match
    pct = lambda a, b: 100.0 * a / b if b else 100.0  # noqa: E731
    return EvalReport(
        uas=pct(head_ok, counted),
        las=pct(label_ok, counted),
        uem=pct(exact, len(gold)),
        counted_tokens=counted,
        excluded_tokens=excluded,
        sentences=len(gold),
    )

"""Sentence/tree data model and CoNLL / embedding file I/O.

Position 0 is the artificial root everywhere. A tree over an ``n``-word
sentence stores ``heads[m - 1]`` for word ``m`` (words are 1-based), so
``heads[m - 1] == 0`` means word ``m`` is a child of the root.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

TextSource = Union[str, bytes, IO[str], IO[bytes]]

_INT_RE = re.compile(r"^[0-9]+$")


class ConllError(ValueError):
    """A malformed line in a CoNLL or embedding file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConllError):
    """Well-formed columns whose content violates the tree data model."""


class TreeError(ValueError):
    """A head assignment that is not a tree rooted at 0."""


def tree_violation(heads: Sequence[int]) -> Optional[str]:
    """Return a description of why ``heads`` is not a tree, or None if it is."""
    n = len(heads)
    for i, h in enumerate(heads, start=1):
        if not 0 <= h <= n:
            return f"head {h} of word {i} out of range 0..{n}"
        if h == i:
            return f"word {i} is its own head"
    # 0 = unseen, 1 = on current path, 2 = known to reach the root
    state = [0] * (n + 1)
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if state[node] == 1:
            return f"cycle through word {node}"
        for p in path:
            state[p] = 2
    return None


def is_projective(heads: Sequence[int]) -> bool:
    """True if no two arcs cross when drawn above the sentence (root at the left)."""
    arcs = [(min(h, m), max(h, m)) for m, h in enumerate(heads, start=1)]
    for i, (a, b) in enumerate(arcs):
        for c, d in arcs[i + 1:]:
            if a < c < b < d or c < a < d < b:
                return False
    return True


@dataclass(frozen=True)
class ParseTree:
    """A labeled dependency tree; ``heads[m - 1]`` is the head of word ``m``."""

    heads: tuple
    labels: tuple = ()

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        labels = tuple(self.labels) if self.labels else ("",) * len(heads)
        if len(labels) != len(heads):
            raise TreeError(f"{len(heads)} heads but {len(labels)} labels")
        problem = tree_violation(heads)
        if problem is not None:
            raise TreeError(problem)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.heads)

    @property
    def head_array(self) -> np.ndarray:
        """Heads padded with -1 at index 0, so ``head_array[m]`` is the head of ``m``."""
        return np.array((-1,) + self.heads, dtype=np.int64)

    def arcs(self) -> Iterator[tuple]:
        for m, h in enumerate(self.heads, start=1):
            yield h, m

    def is_projective(self) -> bool:
        return is_projective(self.heads)

    def unlabeled(self) -> "ParseTree":
        return ParseTree(self.heads)

    def with_labels(self, labels: Sequence[str]) -> "ParseTree":
        return ParseTree(self.heads, tuple(labels))


@dataclass(frozen=True)
class Sentence:
    forms: tuple
    tags: tuple
    gold: Optional[ParseTree] = None
    sentence_id: str = ""
    # extra CoNLL columns kept only for faithful re-emission
    lemmas: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.forms) < 1:
            raise ValueError("a sentence needs at least one word")
        if len(self.tags) != len(self.forms):
            raise ValueError("forms and tags differ in length")
        if self.gold is not None and len(self.gold) != len(self.forms):
            raise ValueError(
                f"gold tree has {len(self.gold)} heads for {len(self.forms)} words"
            )

    def __len__(self) -> int:
        return len(self.forms)

    @property
    def tokens(self) -> tuple:
        return tuple(zip(self.forms, self.tags))


def _lines(source: TextSource) -> Iterator[str]:
    """Iterate text lines of a path, a bytes payload, or an open stream."""
    if isinstance(source, bytes):
        yield from io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        with open(source, encoding="utf-8") as f:
            yield from f
    else:
        for line in source:
            yield line.decode("utf-8") if isinstance(line, bytes) else line


def iter_conll(source: TextSource, format: str = "conllu") -> Iterator[Sentence]:
    """Yield sentences from a CoNLL-X or CoNLL-U stream.

    ``source`` is a path, raw bytes, or an open text/binary stream. Multiword
    ranges (``1-2``) and empty nodes (``1.1``) are skipped. A gold tree is
    attached when every token has a head; it must be a valid tree.
    """
    if format not in ("conllx", "conllu"):
        raise ValueError(f"unknown format {format!r}")
    rows: list = []
    start = 0
    count = 0
    sent_id = None
    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if rows:
                count += 1
                yield _block_to_sentence(rows, start, sent_id or f"s{count}")
                rows = []
                sent_id = None
            continue
        if line.startswith("#") and (format == "conllu" or not rows):
            key, _, value = line[1:].partition("=")
            if key.strip() == "sent_id" and value.strip():
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        if not _INT_RE.match(cols[0]):
            if "-" in cols[0] or "." in cols[0]:
                continue
            raise ConllError(f"bad token id {cols[0]!r}", lineno)
        if not rows:
            start = lineno
        rows.append((lineno, cols))
    if rows:
        count += 1
        yield _block_to_sentence(rows, start, sent_id or f"s{count}")


def _block_to_sentence(rows: list, start: int, sentence_id: str) -> Sentence:
    forms, tags, lemmas, heads, labels = [], [], [], [], []
    for expected, (lineno, cols) in enumerate(rows, start=1):
        if int(cols[0]) != expected:
            raise ConllError(f"token id {cols[0]} out of sequence (expected {expected})", lineno)
        forms.append(cols[1])
        lemmas.append(cols[2])
        tags.append(cols[3] if cols[3] != "_" else cols[4])
        head = cols[6]
        if head == "_":
            heads.append(None)
        else:
            if not _INT_RE.match(head):
                raise ConllError(f"head field {head!r} is not an integer", lineno)
            heads.append(int(head))
        labels.append("" if cols[7] == "_" else cols[7])
    n = len(forms)
    gold = None
    if all(h is not None for h in heads):
        for (lineno, _), h in zip(rows, heads):
            if h > n:
                raise ValidationError(f"head {h} out of range for a {n}-word sentence", lineno)
        try:
            gold = ParseTree(tuple(heads), tuple(labels))
        except TreeError as exc:
            raise ValidationError(f"gold annotation is not a tree: {exc}", start) from exc
    return Sentence(tuple(forms), tuple(tags), gold, sentence_id=sentence_id, lemmas=tuple(lemmas))


def read_conll(source: TextSource, format: str = "conllu") -> list:
    """Read every sentence of a CoNLL-X / CoNLL-U source into a list."""
    return list(iter_conll(source, format))


def format_conll(
    sentences: Sequence[Sentence],
    trees: Optional[Sequence[Optional[ParseTree]]] = None,
    format: str = "conllu",
) -> str:
    """Render sentences as CoNLL text, taking heads/labels from ``trees``.

    ``trees`` defaults to the gold trees. The POS tag is written to both the
    coarse and fine tag columns.
    """
    if trees is None:
        trees = [s.gold for s in sentences]
    if len(trees) != len(sentences):
        raise ValueError(f"{len(sentences)} sentences but {len(trees)} trees")
    out = []
    for sent, tree in zip(sentences, trees):
        if tree is not None and len(tree) != len(sent):
            raise ValueError(
                f"tree of length {len(tree)} for sentence {sent.sentence_id!r} of length {len(sent)}"
            )
        if format == "conllu" and sent.sentence_id:
            out.append(f"# sent_id = {sent.sentence_id}")
        for i, (form, tag) in enumerate(sent.tokens, start=1):
            lemma = sent.lemmas[i - 1] if sent.lemmas else "_"
            if tree is None:
                head, label = "_", "_"
            else:
                head, label = str(tree.heads[i - 1]), tree.labels[i - 1] or "_"
            out.append("\t".join([str(i), form, lemma, tag, tag, "_", head, label, "_", "_"]))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_conll(
    sentences: Sequence[Sentence],
    trees: Optional[Sequence[Optional[ParseTree]]] = None,
    format: str = "conllu",
) -> bytes:
    """UTF-8 bytes of :func:`format_conll`."""
    return format_conll(sentences, trees, format).encode("utf-8")


@dataclass(frozen=True)
class EmbeddingTable:
    """Fixed word vectors. Unknown forms map to the mean of all vectors."""

    dimension: int
    entries: Mapping[str, np.ndarray]
    unk: np.ndarray = field(repr=False, compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("embedding dimension must be positive")
        for form, vec in self.entries.items():
            if vec.shape != (self.dimension,):
                raise ValueError(f"vector for {form!r} has shape {vec.shape}")
        if self.unk is None:
            if self.entries:
                unk = np.mean(np.stack(list(self.entries.values())), axis=0)
            else:
                unk = np.zeros(self.dimension)
            object.__setattr__(self, "unk", unk)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, form: str) -> bool:
        return form in self.entries

    def lookup(self, form: str) -> np.ndarray:
        return self.entries.get(form, self.unk)


def read_embeddings(source: TextSource) -> EmbeddingTable:
    """Read ``form v1 ... vd`` lines; an optional ``count dim`` header is skipped."""
    entries: dict = {}
    dim = None
    for lineno, raw in enumerate(_lines(source), start=1):
        parts = raw.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(_INT_RE.match(p) for p in parts):
            continue
        try:
            vec = np.array([float(x) for x in parts[1:]])
        except ValueError as exc:
            raise ConllError(f"non-numeric vector component ({exc})", lineno) from exc
        if dim is None:
            dim = len(vec)
            if dim == 0:
                raise ConllError("entry has no vector components", lineno)
        elif len(vec) != dim:
            raise ConllError(f"dimension {len(vec)} differs from {dim}", lineno)
        entries[parts[0]] = vec
    if dim is None:
        raise ConllError("no embeddings found")
    return EmbeddingTable(dim, entries)


def write_embeddings(table: EmbeddingTable) -> bytes:
    lines = [f"{len(table)} {table.dimension}"]
    for form, vec in table.entries.items():
        lines.append(form + " " + " ".join(repr(float(x)) for x in vec))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_conll_files(paths: Iterable[str], format: str = "conllu") -> list:
    return [read_conll(p, format) for p in paths]

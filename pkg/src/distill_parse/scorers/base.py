"""Shared machinery for arc scorers: vocabularies, flat parameters, serialization.

Model file format (``.npz`` archive, version 1)
-----------------------------------------------

An uncompressed numpy ``.npz`` with exactly two members:

``meta``
    uint8 array holding UTF-8 JSON: ``{"format": "distill-parse-model",
    "version": 1, "variant": ..., "config": {...}, "vocabs": {name: [items]},
    "layout": [[name, [dims...]], ...]}``. ``layout`` lists the parameter blocks
    in storage order.
``params``
    little-endian float64 vector, the concatenation of every block in
    ``layout`` order, each flattened in C order.

Loading rebuilds the same layout and copies ``params`` verbatim, so a saved and
reloaded model is bit-identical.
"""

from __future__ import annotations

import json
from typing import Iterable, Optional, Sequence

import numpy as np

from ..treebank import ParseTree, Sentence

MODEL_FORMAT = "distill-parse-model"
MODEL_VERSION = 1
UNK = "<UNK>"


class Vocab:
    """Frozen string <-> id map; id 0 is the unknown item."""

    def __init__(self, items: Iterable[str] = (), unk: bool = True):
        self.itos = [UNK] if unk else []
        seen = set(self.itos)
        for it in items:
            if it not in seen:
                seen.add(it)
                self.itos.append(it)
        self.stoi = {s: i for i, s in enumerate(self.itos)}
        self.has_unk = unk

    def __len__(self):
        return len(self.itos)

    def __contains__(self, item):
        return item in self.stoi

    def __getitem__(self, item: str) -> int:
        if self.has_unk:
            return self.stoi.get(item, 0)
        return self.stoi[item]

    def encode(self, items: Sequence[str]) -> np.ndarray:
        return np.array([self[i] for i in items], dtype=np.int64)

    def to_list(self) -> list:
        return list(self.itos)

    @classmethod
    def from_list(cls, items: list) -> "Vocab":
        v = cls(unk=False)
        v.itos = list(items)
        v.stoi = {s: i for i, s in enumerate(v.itos)}
        v.has_unk = bool(items) and items[0] == UNK
        return v


class ScorerModel:
    """Arc scorer plus arc labeler over a flat float64 parameter vector.

    Subclasses declare their blocks with :meth:`_layout` and implement
    :meth:`forward`, :meth:`backward` and :meth:`label_logits`.
    """

    variant = "base"
    frozen_blocks: tuple = ()

    def __init__(self, config: dict, vocabs: dict, params: Optional[np.ndarray] = None):
        self.config = dict(config)
        self.vocabs = vocabs
        self.layout = {}
        offset = 0
        for name, shape in self._layout():
            shape = tuple(int(d) for d in shape)
            size = int(np.prod(shape)) if shape else 1
            self.layout[name] = (offset, shape)
            offset += size
        self.size = offset
        if params is None:
            self.params = np.zeros(offset)
            self._init_params(np.random.default_rng(self.config.get("seed", 0)))
        else:
            params = np.asarray(params, dtype=np.float64)
            if params.shape != (offset,):
                raise ValueError(f"parameter vector has {params.shape}, layout needs ({offset},)")
            self.params = params.copy()

    # --- layout -----------------------------------------------------------
    def _layout(self) -> list:
        raise NotImplementedError

    def _init_params(self, rng: np.random.Generator):
        pass

    def view(self, name: str, params: Optional[np.ndarray] = None) -> np.ndarray:
        off, shape = self.layout[name]
        size = int(np.prod(shape)) if shape else 1
        buf = self.params if params is None else params
        return buf[off:off + size].reshape(shape)

    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for name in self.frozen_blocks:
            off, shape = self.layout[name]
            mask[off:off + int(np.prod(shape))] = True
        return mask

    @property
    def labels(self) -> Vocab:
        return self.vocabs["labels"]

    # --- model interface -------------------------------------------------
    def forward(self, sentence: Sentence, label_heads=None):
        raise NotImplementedError

    def backward(self, sentence: Sentence, d_scores, cache=None, d_label_logits=None) -> np.ndarray:
        raise NotImplementedError

    def score_arcs(self, sentence: Sentence) -> np.ndarray:
        return self.forward(sentence).scores

    def label_logits(self, sentence: Sentence, heads: Sequence[int], cache=None) -> np.ndarray:
        if cache is None or getattr(cache, "label_heads", None) != tuple(heads):
            cache = self.forward(sentence, label_heads=heads)
        return cache.label_logits

    def score_labels(self, sentence: Sentence, tree: ParseTree, cache=None) -> tuple:
        """Label every arc of ``tree`` by argmax of the labeler (first id on ties)."""
        if len(self.labels) == 0:
            return ("",) * len(tree)
        logits = self.label_logits(sentence, tree.heads, cache)
        ids = logits.argmax(axis=1)
        return tuple(self.labels.itos[i] for i in ids)

    def label_loss(self, logits: np.ndarray, gold_labels: Sequence[str]):
        """Mean softmax cross-entropy and its gradient with respect to the logits."""
        n = logits.shape[0]
        if logits.shape[1] == 0:
            return 0.0, np.zeros_like(logits)
        target = np.array([self.labels.stoi.get(lab, -1) for lab in gold_labels])
        z = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        known = target >= 0
        rows = np.flatnonzero(known)
        loss = -np.log(p[rows, target[rows]]).sum() / n
        grad = p / n
        grad[~known] = 0.0
        grad[rows, target[rows]] -= 1.0 / n
        return float(loss), grad

    # --- persistence -----------------------------------------------------
    def copy(self) -> "ScorerModel":
        return type(self)(self.config, self.vocabs, self.params)

    def meta(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "variant": self.variant,
            "config": self.config,
            "vocabs": {k: v.to_list() for k, v in self.vocabs.items()},
            "layout": [[name, list(shape)] for name, (_, shape) in self.layout.items()],
        }

    def save(self, path):
        meta = json.dumps(self.meta(), sort_keys=True).encode("utf-8")
        with open(path, "wb") as f:
            np.savez(
                f,
                meta=np.frombuffer(meta, dtype=np.uint8),
                params=self.params.astype("<f8"),
            )


def load_model(path) -> ScorerModel:
    from . import VARIANTS

    try:
        with np.load(path, allow_pickle=False) as data:
            if not {"meta", "params"} <= set(data.files):
                raise ValueError(f"{path}: not a distill-parse model file")
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            params = np.array(data["params"], dtype=np.float64)
    except (OSError, EOFError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValueError(f"{path}: unreadable model file ({exc})") from exc
    if meta.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a distill-parse model file")
    if meta.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {meta.get('version')}")
    cls = VARIANTS[meta["variant"]]
    vocabs = {k: Vocab.from_list(v) for k, v in meta["vocabs"].items()}
    model = cls(meta["config"], vocabs, params)
    stored = [[n, list(s)] for n, s in meta["layout"]]
    if stored != [[n, list(s)] for n, (_, s) in model.layout.items()]:
        raise ValueError(f"{path}: parameter layout does not match the model variant")
    return model

"""Sparse linear arc scorer over McDonald-style indicator features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..treebank import Sentence
from .base import ScorerModel, Vocab

ROOT_FORM = "<ROOT>"
ROOT_TAG = "<ROOT>"
NONE_TAG = "<NONE>"


def _dist_bucket(d: int) -> str:
    if d <= 4:
        return str(d)
    return "5+" if d < 10 else "10+"


def arc_features(forms: Sequence[str], tags: Sequence[str], h: int, m: int) -> list:
    """Feature strings for arc ``(h, m)``; ``forms``/``tags`` include the root at 0."""
    hw, hp, mw, mp = forms[h], tags[h], forms[m], tags[m]
    direction = "R" if h < m else "L"
    dd = direction + _dist_bucket(abs(h - m))
    n1 = len(tags)
    hp_next = tags[h + 1] if h + 1 < n1 else NONE_TAG
    hp_prev = tags[h - 1] if h > 0 else NONE_TAG
    mp_next = tags[m + 1] if m + 1 < n1 else NONE_TAG
    mp_prev = tags[m - 1] if m > 0 else NONE_TAG
    feats = [
        f"bias={dd}",
        f"hp|mp={hp}|{mp}",
        f"hp|mp|dd={hp}|{mp}|{dd}",
        f"hw|mw={hw}|{mw}",
        f"hw|mw|d={hw}|{mw}|{direction}",
        f"hw|mp={hw}|{mp}|{direction}",
        f"hp|mw={hp}|{mw}|{direction}",
        f"hw|hp={hw}|{hp}|{direction}",
        f"mw|mp={mw}|{mp}|{direction}",
        f"hp={hp}|{dd}",
        f"mp={mp}|{dd}",
        f"ctx+={hp}|{hp_next}|{mp_prev}|{mp}",
        f"ctx-={hp_prev}|{hp}|{mp}|{mp_next}",
        f"ctx+-={hp}|{hp_next}|{mp}|{mp_next}",
        f"ctx-+={hp_prev}|{hp}|{mp_prev}|{mp}",
    ]
    lo, hi = min(h, m), max(h, m)
    between: dict = {}
    for t in tags[lo + 1:hi]:
        between[t] = between.get(t, 0) + 1
    for t, c in between.items():
        feats.append(f"hp|bp|mp={hp}|{t}|{mp}")
        feats.append(f"bpc={hp}|{t}|{mp}|{min(c, 3)}")
    return feats


LABEL_TEMPLATES = ("bias=", "hp|mp|dd=", "hw|mw|d=", "hw|mp=", "hp|mw=", "hw|hp=", "mw|mp=")


def label_features(forms: Sequence[str], tags: Sequence[str], h: int, m: int) -> list:
    """The subset of :func:`arc_features` the labeler uses."""
    return [f for f in arc_features(forms, tags, h, m) if f.startswith(LABEL_TEMPLATES)]


@dataclass
class LinearCache:
    scores: np.ndarray
    ptr: np.ndarray
    feat_ids: np.ndarray
    arc_of_feat: np.ndarray
    label_heads: Optional[tuple] = None
    label_logits: Optional[np.ndarray] = None
    label_ids: Optional[list] = None


class LinearScorer(ScorerModel):
    """``score(h, m) = sum of weights of the arc's features``.

    The labeler is a linear softmax classifier over a smaller feature set
    (:data:`LABEL_TEMPLATES`) collected from gold arcs only.
    """

    variant = "linear"

    def __init__(self, config: dict, vocabs: dict, params=None):
        self._cache: dict = {}
        super().__init__(config, vocabs, params)

    def _layout(self):
        f = len(self.vocabs["features"])
        g = len(self.vocabs["label_features"])
        return [("arc_weights", (f,)), ("label_weights", (g, len(self.vocabs["labels"])))]

    def _init_params(self, rng):
        scale = float(self.config.get("init_scale", 0.0))
        if scale:
            self.params[:] = rng.normal(0.0, scale, size=self.size)

    @classmethod
    def build(cls, sentences: Sequence[Sentence], config: Optional[dict] = None) -> "LinearScorer":
        """Collect the feature alphabet from every candidate arc of ``sentences``."""
        cfg = {"variant": "linear", "seed": 0, "init_scale": 0.0}
        cfg.update(config or {})
        feats: dict = {}
        labels: dict = {}
        lfeats: dict = {}
        for s in sentences:
            forms = (ROOT_FORM,) + s.forms
            tags = (ROOT_TAG,) + s.tags
            n = len(s)
            for h in range(n + 1):
                for m in range(1, n + 1):
                    if h != m:
                        for f in arc_features(forms, tags, h, m):
                            feats.setdefault(f, None)
            if s.gold is not None:
                for m, (h, lab) in enumerate(zip(s.gold.heads, s.gold.labels), start=1):
                    labels.setdefault(lab, None)
                    for f in label_features(forms, tags, h, m):
                        lfeats.setdefault(f, None)
        vocabs = {
            "features": Vocab(feats),
            "label_features": Vocab(lfeats),
            "labels": Vocab(sorted(labels), unk=False),
        }
        return cls(cfg, vocabs)

    def _extract(self, sentence: Sentence):
        key = (sentence.forms, sentence.tags)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        forms = (ROOT_FORM,) + sentence.forms
        tags = (ROOT_TAG,) + sentence.tags
        N = len(forms)
        stoi = self.vocabs["features"].stoi
        ids, arcs = [], []
        ptr = np.zeros(N * N + 1, dtype=np.int64)
        for h in range(N):
            for m in range(N):
                a = h * N + m
                if m != 0 and h != m:
                    for f in arc_features(forms, tags, h, m):
                        i = stoi.get(f)
                        if i is not None:
                            ids.append(i)
                            arcs.append(a)
                ptr[a + 1] = len(ids)
        out = (ptr, np.array(ids, dtype=np.int64), np.array(arcs, dtype=np.int64))
        if len(self._cache) > 50000:
            self._cache.clear()
        self._cache[key] = out
        return out

    def forward(self, sentence: Sentence, label_heads=None) -> LinearCache:
        N = len(sentence) + 1
        ptr, ids, arcs = self._extract(sentence)
        w = self.view("arc_weights")
        flat = np.bincount(arcs, weights=w[ids], minlength=N * N) if len(ids) else np.zeros(N * N)
        cache = LinearCache(flat.reshape(N, N), ptr, ids, arcs)
        if label_heads is not None:
            lw = self.view("label_weights")
            stoi = self.vocabs["label_features"].stoi
            forms = (ROOT_FORM,) + sentence.forms
            tags = (ROOT_TAG,) + sentence.tags
            logits = np.zeros((N - 1, lw.shape[1]))
            label_ids = []
            for m, h in enumerate(label_heads, start=1):
                fi = [stoi[f] for f in label_features(forms, tags, h, m) if f in stoi]
                label_ids.append(fi)
                logits[m - 1] = lw[fi].sum(axis=0)
            cache.label_heads = tuple(label_heads)
            cache.label_logits = logits
            cache.label_ids = label_ids
        return cache

    def backward(self, sentence: Sentence, d_scores, cache=None, d_label_logits=None) -> np.ndarray:
        N = len(sentence) + 1
        d_scores = np.asarray(d_scores, dtype=np.float64)
        if d_scores.shape != (N, N):
            raise ValueError(f"upstream gradient shape {d_scores.shape} != {(N, N)}")
        if cache is None:
            cache = self.forward(sentence)
        grad = np.zeros(self.size)
        g_arc = self.view("arc_weights", grad)
        flat = d_scores.reshape(-1)
        if len(cache.feat_ids):
            g_arc += np.bincount(cache.feat_ids, weights=flat[cache.arc_of_feat], minlength=len(g_arc))
        if d_label_logits is not None:
            if cache.label_heads is None:
                raise ValueError("label gradient given but the forward pass computed no label logits")
            g_lab = self.view("label_weights", grad)
            for fi, d in zip(cache.label_ids, d_label_logits):
                np.add.at(g_lab, fi, d)
        return grad

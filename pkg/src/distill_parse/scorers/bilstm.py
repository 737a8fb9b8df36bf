"""BiLSTM arc scorer: ``s(h, m) = v . tanh(W_h x_h + W_m x_m + b)``.

Word inputs are ``relu([pretrained(w); word(w); pos(t)])`` with the pretrained
block frozen. The root's contextual vector is a learned parameter rather than
the output of the recurrence. Everything runs in float64 with hand-written
backpropagation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..treebank import EmbeddingTable, Sentence
from .base import ScorerModel, Vocab

DEFAULTS = {
    "variant": "bilstm",
    "seed": 0,
    "pretrained_dim": 0,
    "word_dim": 32,
    "pos_dim": 12,
    "lstm_dim": 100,
    "lstm_layers": 2,
    "hidden_dim": 100,
    "label_hidden_dim": 100,
}


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class _LSTMTrace:
    x: np.ndarray
    gates: list = field(default_factory=list)  # (i, f, o, g, c, tanh_c) per step
    h: Optional[np.ndarray] = None


def _lstm_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> _LSTMTrace:
    T, D = x.shape
    H = b.shape[0] // 4
    Wx, Wh = W[:, :D], W[:, D:]
    zx = x @ Wx.T + b
    h = np.zeros(H)
    c = np.zeros(H)
    out = np.zeros((T, H))
    tr = _LSTMTrace(x)
    for t in range(T):
        z = zx[t] + Wh @ h
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        o = _sigmoid(z[2 * H:3 * H])
        g = np.tanh(z[3 * H:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        out[t] = h
        tr.gates.append((i, f, o, g, c, tc))
    tr.h = out
    return tr


def _lstm_backward(W, tr: _LSTMTrace, dh_seq: np.ndarray):
    """Gradients ``(dW, db, dx)`` for one direction of one layer."""
    T, D = tr.x.shape
    H = dh_seq.shape[1]
    Wh = W[:, D:]
    dz_all = np.zeros((T, 4 * H))
    dWh = np.zeros((4 * H, H))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, o, g, c, tc = tr.gates[t]
        c_prev = tr.gates[t - 1][4] if t > 0 else np.zeros(H)
        h_prev = tr.h[t - 1] if t > 0 else np.zeros(H)
        dh = dh_seq[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            do * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ])
        dz_all[t] = dz
        dWh += np.outer(dz, h_prev)
        dh_next = Wh.T @ dz
        dc_next = dc * f
    dWx = dz_all.T @ tr.x
    dx = dz_all @ W[:, :D]
    return np.concatenate([dWx, dWh], axis=1), dz_all.sum(axis=0), dx


@dataclass
class BiLSTMCache:
    scores: np.ndarray
    ids: tuple
    inp_pre: np.ndarray
    traces: list
    xbar: np.ndarray
    A: np.ndarray
    B: np.ndarray
    Z: np.ndarray
    label_heads: Optional[tuple] = None
    label_logits: Optional[np.ndarray] = None
    label_hidden: Optional[np.ndarray] = None


class BiLSTMScorer(ScorerModel):
    variant = "bilstm"
    frozen_blocks = ("pretrained",)

    def _layout(self):
        c = self.config
        H = c["lstm_dim"]
        d_in = c["pretrained_dim"] + c["word_dim"] + c["pos_dim"]
        blocks = [
            ("pretrained", (len(self.vocabs["pretrained"]), c["pretrained_dim"])),
            ("word_emb", (len(self.vocabs["words"]), c["word_dim"])),
            ("pos_emb", (len(self.vocabs["tags"]), c["pos_dim"])),
        ]
        for layer in range(c["lstm_layers"]):
            d = d_in if layer == 0 else 2 * H
            for direction in "fb":
                blocks.append((f"lstm{layer}{direction}_W", (4 * H, d + H)))
                blocks.append((f"lstm{layer}{direction}_b", (4 * H,)))
        Hs, Hl, L = c["hidden_dim"], c["label_hidden_dim"], len(self.vocabs["labels"])
        blocks += [
            ("root", (2 * H,)),
            ("arc_Wh", (Hs, 2 * H)),
            ("arc_Wm", (Hs, 2 * H)),
            ("arc_b", (Hs,)),
            ("arc_v", (Hs,)),
            ("lab_Wh", (Hl, 2 * H)),
            ("lab_Wm", (Hl, 2 * H)),
            ("lab_b", (Hl,)),
            ("lab_out", (L, Hl)),
            ("lab_out_b", (L,)),
        ]
        return blocks

    def _init_params(self, rng):
        for name, (off, shape) in self.layout.items():
            block = self.view(name)
            if name == "pretrained" or block.size == 0:
                continue
            if name.endswith("_emb") or name == "root":
                block[...] = rng.normal(0.0, 0.1, size=shape)
            elif len(shape) == 2:
                bound = np.sqrt(6.0 / (shape[0] + shape[1]))
                block[...] = rng.uniform(-bound, bound, size=shape)
            elif name == "arc_v":
                bound = np.sqrt(6.0 / (shape[0] + 1))
                block[...] = rng.uniform(-bound, bound, size=shape)
            elif name.endswith("_b") and name.startswith("lstm"):
                H = shape[0] // 4
                block[H:2 * H] = 1.0  # forget gate bias
        if self._pretrained_init is not None:
            self.view("pretrained")[...] = self._pretrained_init

    def __init__(self, config: dict, vocabs: dict, params=None, pretrained: Optional[np.ndarray] = None):
        self._pretrained_init = pretrained
        super().__init__(config, vocabs, params)
        self._pretrained_init = None

    @classmethod
    def build(
        cls,
        sentences: Sequence[Sentence],
        config: Optional[dict] = None,
        embeddings: Optional[EmbeddingTable] = None,
    ) -> "BiLSTMScorer":
        cfg = dict(DEFAULTS)
        cfg.update(config or {})
        cfg["variant"] = "bilstm"
        words, tags, labels = {}, {}, {}
        for s in sentences:
            for w in s.forms:
                words.setdefault(w, None)
            for t in s.tags:
                tags.setdefault(t, None)
            if s.gold is not None:
                for lab in s.gold.labels:
                    labels.setdefault(lab, None)
        pre_rows = None
        if embeddings is not None:
            cfg["pretrained_dim"] = embeddings.dimension
            pre_vocab = Vocab(embeddings.entries)
            pre_rows = np.stack([embeddings.unk] + [embeddings.entries[w] for w in pre_vocab.itos[1:]])
        else:
            cfg["pretrained_dim"] = 0
            pre_vocab = Vocab()
        vocabs = {
            "pretrained": pre_vocab,
            "words": Vocab(words),
            "tags": Vocab(tags),
            "labels": Vocab(sorted(labels), unk=False),
        }
        return cls(cfg, vocabs, pretrained=pre_rows)

    def copy(self):
        return type(self)(self.config, self.vocabs, self.params)

    # --- forward ------------------------------------------------------------
    def _encode(self, sentence: Sentence):
        v = self.vocabs
        return (
            v["pretrained"].encode(sentence.forms),
            v["words"].encode(sentence.forms),
            v["tags"].encode(sentence.tags),
        )

    def forward(self, sentence: Sentence, label_heads=None) -> BiLSTMCache:
        c = self.config
        ids = self._encode(sentence)
        pre_ids, word_ids, tag_ids = ids
        inp_pre = np.concatenate(
            [self.view("pretrained")[pre_ids], self.view("word_emb")[word_ids], self.view("pos_emb")[tag_ids]],
            axis=1,
        )
        x = np.maximum(inp_pre, 0.0)
        traces = []
        for layer in range(c["lstm_layers"]):
            fw = _lstm_forward(self.view(f"lstm{layer}f_W"), self.view(f"lstm{layer}f_b"), x)
            bw = _lstm_forward(self.view(f"lstm{layer}b_W"), self.view(f"lstm{layer}b_b"), x[::-1])
            traces.append((fw, bw))
            x = np.concatenate([fw.h, bw.h[::-1]], axis=1)
        xbar = np.concatenate([self.view("root")[None, :], x], axis=0)
        A = xbar @ self.view("arc_Wh").T
        B = xbar @ self.view("arc_Wm").T
        Z = np.tanh(A[:, None, :] + B[None, :, :] + self.view("arc_b"))
        scores = Z @ self.view("arc_v")
        cache = BiLSTMCache(scores, ids, inp_pre, traces, xbar, A, B, Z)
        if label_heads is not None:
            heads = np.asarray(label_heads)
            m = np.arange(1, len(heads) + 1)
            hid = np.tanh(xbar[heads] @ self.view("lab_Wh").T + xbar[m] @ self.view("lab_Wm").T + self.view("lab_b"))
            cache.label_heads = tuple(int(h) for h in heads)
            cache.label_hidden = hid
            cache.label_logits = hid @ self.view("lab_out").T + self.view("lab_out_b")
        return cache

    # --- backward -----------------------------------------------------------
    def backward(self, sentence: Sentence, d_scores, cache=None, d_label_logits=None) -> np.ndarray:
        c = self.config
        N = len(sentence) + 1
        d_scores = np.array(d_scores, dtype=np.float64)
        if d_scores.shape != (N, N):
            raise ValueError(f"upstream gradient shape {d_scores.shape} != {(N, N)}")
        if cache is None:
            cache = self.forward(sentence)
        d_scores[:, 0] = 0.0
        d_scores[np.diag_indices(N)] = 0.0
        grad = np.zeros(self.size)
        G = lambda name: self.view(name, grad)  # noqa: E731

        v = self.view("arc_v")
        G("arc_v")[...] = np.einsum("hm,hmk->k", d_scores, cache.Z)
        dpre = d_scores[:, :, None] * v[None, None, :] * (1.0 - cache.Z ** 2)
        G("arc_b")[...] = dpre.sum(axis=(0, 1))
        dA = dpre.sum(axis=1)
        dB = dpre.sum(axis=0)
        G("arc_Wh")[...] = dA.T @ cache.xbar
        G("arc_Wm")[...] = dB.T @ cache.xbar
        dxbar = dA @ self.view("arc_Wh") + dB @ self.view("arc_Wm")

        if d_label_logits is not None:
            if cache.label_heads is None:
                raise ValueError("label gradient given but the forward pass computed no label logits")
            heads = np.asarray(cache.label_heads)
            m = np.arange(1, N)
            hid = cache.label_hidden
            G("lab_out")[...] = d_label_logits.T @ hid
            G("lab_out_b")[...] = d_label_logits.sum(axis=0)
            dh = (d_label_logits @ self.view("lab_out")) * (1.0 - hid ** 2)
            G("lab_b")[...] = dh.sum(axis=0)
            G("lab_Wh")[...] = dh.T @ cache.xbar[heads]
            G("lab_Wm")[...] = dh.T @ cache.xbar[m]
            np.add.at(dxbar, heads, dh @ self.view("lab_Wh"))
            dxbar[m] += dh @ self.view("lab_Wm")

        G("root")[...] = dxbar[0]
        dx = dxbar[1:]
        H = c["lstm_dim"]
        for layer in range(c["lstm_layers"] - 1, -1, -1):
            fw, bw = cache.traces[layer]
            dWf, dbf, dxf = _lstm_backward(self.view(f"lstm{layer}f_W"), fw, dx[:, :H])
            dWb, dbb, dxb = _lstm_backward(self.view(f"lstm{layer}b_W"), bw, dx[::-1, H:])
            G(f"lstm{layer}f_W")[...] = dWf
            G(f"lstm{layer}f_b")[...] = dbf
            G(f"lstm{layer}b_W")[...] = dWb
            G(f"lstm{layer}b_b")[...] = dbb
            dx = dxf + dxb[::-1]

        d_inp = dx * (cache.inp_pre > 0)
        P = c["pretrained_dim"]
        Wd = c["word_dim"]
        _, word_ids, tag_ids = cache.ids
        np.add.at(G("word_emb"), word_ids, d_inp[:, P:P + Wd])
        np.add.at(G("pos_emb"), tag_ids, d_inp[:, P + Wd:])
        return grad

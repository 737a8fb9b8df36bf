"""Exact first-order decoders and a brute-force tree enumerator.

Score matrices are dense ``(n + 1, n + 1)`` float arrays indexed
``scores[h, m]``; column 0 (the root as a modifier) and the diagonal are never
read. An ``(n + 1, n)`` array without the root column is accepted as well.

Both decoders maximize a lexicographic triple per tree:

1. minus the number of root children, when ``single_root`` is set (so exactly
   one word attaches to the root whenever that is feasible, which it always is);
2. the arc-factored score ``sum_m scores[heads[m], m]``;
3. minus ``sum_m (h * (n + 1) + |h - m|)``, i.e. lower head indices first, then
   shorter arcs.

Each component is additive over arcs, so the dynamic program (Eisner) and the
contraction algorithm (Chu-Liu-Edmonds) stay exact under this ordering.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .treebank import ParseTree, is_projective

MAX_ENUMERATION_LENGTH = 8


def as_score_matrix(scores) -> np.ndarray:
    """Return ``scores`` as a float64 ``(n + 1, n + 1)`` array."""
    a = np.asarray(scores, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 2:
        raise ValueError(f"score matrix must be 2-D with n + 1 >= 2 rows, got {a.shape}")
    if a.shape[1] == a.shape[0] - 1:
        a = np.concatenate([np.zeros((a.shape[0], 1)), a], axis=1)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"score matrix shape {a.shape} is neither (n+1, n+1) nor (n+1, n)")
    return a


def tree_score(scores, tree) -> float:
    """Arc-factored score of ``tree`` (a ParseTree or a head sequence), exactly rounded."""
    a = as_score_matrix(scores)
    heads = tree.heads if isinstance(tree, ParseTree) else tuple(tree)
    n = a.shape[0] - 1
    if len(heads) != n:
        raise ValueError(f"tree of length {len(heads)} for a score matrix over {n} words")
    return math.fsum(a[h, m] for m, h in enumerate(heads, start=1))


def _tiebreak_key(n: int) -> np.ndarray:
    h = np.arange(n + 1)[:, None]
    m = np.arange(n + 1)[None, :]
    return -(h * (n + 1) + np.abs(h - m)).astype(np.float64)


def _weights(scores: np.ndarray, single_root: bool) -> np.ndarray:
    n = scores.shape[0] - 1
    w = np.zeros((3,) + scores.shape)
    w[0, 0, :] = -1.0 if single_root else 0.0
    w[0, :, 0] = -np.inf
    w[0][np.diag_indices(n + 1)] = -np.inf
    w[1] = scores
    w[1, :, 0] = 0.0
    w[1][np.diag_indices(n + 1)] = 0.0
    w[2] = _tiebreak_key(n)
    return w


def _lexmax(cands: np.ndarray, mask=None):
    """Lexicographic max over the last axis of ``cands`` (components on axis 0).

    Returns the index of the first maximizer and the maximizing component values.
    """
    keep = np.ones(cands.shape[1:], dtype=bool) if mask is None else mask.copy()
    for c in cands:
        v = np.where(keep, c, -np.inf)
        keep &= v == v.max(axis=-1, keepdims=True)
    idx = keep.argmax(axis=-1)
    vals = np.take_along_axis(cands, idx[None, ..., None], axis=-1)[..., 0]
    return idx, vals


def eisner_decode(scores, single_root: bool = True) -> ParseTree:
    """Highest-scoring projective tree, O(n^3) time and O(n^2) space."""
    a = as_score_matrix(scores)
    n = a.shape[0] - 1
    w = _weights(a, single_root)
    K, N = w.shape[0], n + 1
    # chart[kind][:, s, t]; kinds: complete right (head s), complete left (head t),
    # incomplete right (arc s -> t), incomplete left (arc t -> s)
    c_r = np.zeros((K, N, N))
    c_l = np.zeros((K, N, N))
    i_r = np.zeros((K, N, N))
    i_l = np.zeros((K, N, N))
    bp = {k: np.zeros((N, N), dtype=np.int64) for k in ("cr", "cl", "ir", "il")}
    for width in range(1, N):
        s = np.arange(N - width)
        t = s + width
        # incomplete items: split r in s..t-1
        r = s[:, None] + np.arange(width)[None, :]
        base = c_r[:, s[:, None], r] + c_l[:, r + 1, t[:, None]]
        idx, vals = _lexmax(base)
        bp["ir"][s, t] = bp["il"][s, t] = s + idx
        i_r[:, s, t] = vals + w[:, s, t]
        i_l[:, s, t] = vals + w[:, t, s]
        # complete left: head t, split r in s..t-1
        idx, vals = _lexmax(c_l[:, s[:, None], r] + i_l[:, r, t[:, None]])
        bp["cl"][s, t] = s + idx
        c_l[:, s, t] = vals
        # complete right: head s, split r in s+1..t
        r1 = r + 1
        idx, vals = _lexmax(i_r[:, s[:, None], r1] + c_r[:, r1, t[:, None]])
        bp["cr"][s, t] = s + 1 + idx
        c_r[:, s, t] = vals

    heads = [0] * (n + 1)
    stack = [("cr", 0, n)]
    while stack:
        kind, s, t = stack.pop()
        if s == t:
            continue
        r = int(bp[kind][s, t])
        if kind == "ir":
            heads[t] = s
            stack += [("cr", s, r), ("cl", r + 1, t)]
        elif kind == "il":
            heads[s] = t
            stack += [("cr", s, r), ("cl", r + 1, t)]
        elif kind == "cl":
            stack += [("cl", s, r), ("il", r, t)]
        else:
            stack += [("ir", s, r), ("cr", r, t)]
    return ParseTree(tuple(heads[1:]))


def _find_cycle(heads: np.ndarray):
    n = len(heads)
    color = np.zeros(n, dtype=np.int8)
    color[0] = 2
    for start in range(1, n):
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = heads[v]
        if color[v] == 1:
            return path[path.index(v):]
        for p in path:
            color[p] = 2
    return None


def _cle(w: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Recursive Chu-Liu-Edmonds on lexicographic weights ``w[:, h, m]``."""
    N = w.shape[1]
    # best incoming arc for every node, over heads h (axis 1 of w)
    best, _ = _lexmax(w.transpose(0, 2, 1), valid.T)
    heads = best.copy()
    heads[0] = -1
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads
    in_cycle = np.zeros(N, dtype=bool)
    in_cycle[cycle] = True
    rest = np.flatnonzero(~in_cycle)
    cyc = np.asarray(cycle)
    new = len(rest)
    w2 = np.zeros((w.shape[0], new + 1, new + 1))
    v2 = np.zeros((new + 1, new + 1), dtype=bool)
    w2[:, :new, :new] = w[:, rest[:, None], rest[None, :]]
    v2[:new, :new] = valid[rest[:, None], rest[None, :]]
    # arcs entering the cycle: u -> v replaces heads[v] -> v
    into = w[:, rest[:, None], cyc[None, :]] - w[:, heads[cyc], cyc][:, None, :]
    into_mask = valid[rest[:, None], cyc[None, :]]
    enter, vals = _lexmax(into, into_mask)
    w2[:, :new, new] = vals
    v2[:new, new] = into_mask.any(axis=1)
    # arcs leaving the cycle
    out = w[:, cyc[:, None], rest[None, :]].transpose(0, 2, 1)
    out_mask = valid[cyc[:, None], rest[None, :]].T
    leave, vals = _lexmax(out, out_mask)
    w2[:, new, :new] = vals
    v2[new, :new] = out_mask.any(axis=1)

    sub = _cle(w2, v2)
    result = heads.copy()
    for i, v in enumerate(rest):
        if i == 0:
            continue
        h = sub[i]
        result[v] = cyc[leave[i]] if h == new else rest[h]
    u = sub[new]
    result[cyc[enter[u]]] = rest[u]
    result[0] = -1
    return result


def cle_decode(scores, single_root: bool = True) -> ParseTree:
    """Highest-scoring directed spanning tree rooted at 0 (non-projective allowed)."""
    a = as_score_matrix(scores)
    n = a.shape[0] - 1
    w = _weights(a, single_root)
    valid = np.isfinite(w[0])
    w[0][~valid] = 0.0
    if n == 1:
        return ParseTree((0,))
    heads = _cle(w, valid)
    return ParseTree(tuple(int(h) for h in heads[1:]))


def decode(scores, decoder: str = "eisner", single_root: bool = True) -> ParseTree:
    if decoder == "eisner":
        return eisner_decode(scores, single_root)
    if decoder in ("cle", "mst"):
        return cle_decode(scores, single_root)
    raise ValueError(f"unknown decoder {decoder!r}")


def _prufer_to_heads(seq: tuple, n: int) -> tuple:
    """Decode a Prüfer sequence over nodes 0..n and orient the tree away from 0."""
    degree = [1] * (n + 1)
    for x in seq:
        degree[x] += 1
    adj = [[] for _ in range(n + 1)]
    for x in seq:
        leaf = min(i for i in range(n + 1) if degree[i] == 1)
        adj[leaf].append(x)
        adj[x].append(leaf)
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n + 1) if degree[i] == 1]
    adj[u].append(v)
    adj[v].append(u)
    heads = [0] * (n + 1)
    seen = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                heads[nb] = node
                frontier.append(nb)
    return tuple(heads[1:])


@lru_cache(maxsize=32)
def enumerate_heads(n: int, projective_only: bool = False, single_root: bool = False) -> np.ndarray:
    """All valid head assignments as an int array of shape ``(count, n)``.

    Rows are sorted lexicographically. The unrestricted count is ``(n + 1) ** (n - 1)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_ENUMERATION_LENGTH:
        raise ValueError(f"refusing to enumerate trees for n={n} > {MAX_ENUMERATION_LENGTH}")
    rows = sorted(
        _prufer_to_heads(seq, n) for seq in itertools.product(range(n + 1), repeat=n - 1)
    )
    if projective_only:
        rows = [r for r in rows if is_projective(r)]
    if single_root:
        rows = [r for r in rows if r.count(0) == 1]
    out = np.array(rows, dtype=np.int64).reshape(len(rows), n)
    out.setflags(write=False)
    return out


def enumerate_trees(n: int, projective_only: bool = False, single_root: bool = False) -> list:
    """Every tree over ``n`` words (``n <= 8``), optionally only projective ones."""
    return [ParseTree(tuple(r)) for r in enumerate_heads(n, projective_only, single_root)]


def brute_force_decode(scores, projective_only: bool = False, single_root: bool = True) -> tuple:
    """Exhaustive argmax; returns ``(best_score, best_trees)`` with all maximizers.

    Scores are screened in vectorized form and the near-maximal candidates are
    re-scored with :func:`tree_score` so the returned maximum is exactly rounded.
    """
    a = as_score_matrix(scores)
    n = a.shape[0] - 1
    heads = enumerate_heads(n, projective_only, single_root)
    totals = a[heads, np.arange(1, n + 1)].sum(axis=1)
    top = totals.max()
    slack = 1e-9 * max(1.0, abs(top))
    cands = heads[totals >= top - slack]
    exact = [tree_score(a, tuple(r)) for r in cands]
    best = max(exact)
    trees = [ParseTree(tuple(r)) for r, e in zip(cands, exact) if e == best]
    return best, trees

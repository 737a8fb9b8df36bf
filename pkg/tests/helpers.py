"""Small generators shared by the test modules."""

import numpy as np

from distill_parse.ensemble import tally_votes
from distill_parse.synthetic import generate_treebank, toy_embeddings
from distill_parse.treebank import ParseTree


def random_heads(rng, n, single_root=False):
    """Random (not uniform) tree: attach words in random order to attached nodes."""
    order = list(rng.permutation(np.arange(1, n + 1)))
    attached = [0]
    heads = [0] * n
    for k, m in enumerate(order):
        pool = attached if not single_root or k == 0 else attached[1:]
        heads[m - 1] = int(rng.choice(pool))
        attached.append(int(m))
    return tuple(heads)


def random_tree(rng, n, single_root=False, labels=None):
    heads = random_heads(rng, n, single_root)
    labs = tuple(rng.choice(labels) for _ in range(n)) if labels else None
    return ParseTree(heads, labs) if labs else ParseTree(heads)


def random_votes(rng, n, size):
    return tally_votes([random_tree(rng, n) for _ in range(size)], n)


def random_scores(rng, n, integer=False):
    if integer:
        return rng.integers(-3, 4, size=(n + 1, n + 1)).astype(float)
    return rng.normal(size=(n + 1, n + 1))


# One modifier, 21 voters spread over seven candidate heads ("changes" is gold),
# with the expected per-arc distillation cost of each candidate (3 decimals).
VOTE_FIXTURE_HEADS = ["go", "work", "modification", "changes", "system", "pump", "stations"]
VOTE_FIXTURE_COUNTS = {"go": 3, "work": 2, "modification": 4, "changes": 6, "system": 2, "pump": 4, "stations": 0}
VOTE_FIXTURE_COST = {
    "go": 0.143, "work": 0.191, "modification": 0.096, "changes": 0.000,
    "system": 0.191, "pump": 0.096, "stations": 0.286,
}


def vote_fixture():
    """Sentence of the 7 candidate heads plus modifier 8, and its 21-voter table.

    Every voter attaches words 2..7 to word 1 and word 1 to the root; only the
    head of word 8 varies.
    """
    parses = []
    for idx, word in enumerate(VOTE_FIXTURE_HEADS, start=1):
        for _ in range(VOTE_FIXTURE_COUNTS[word]):
            parses.append(ParseTree((0, 1, 1, 1, 1, 1, 1, idx)))
    gold = ParseTree((0, 1, 1, 1, 1, 1, 1, VOTE_FIXTURE_HEADS.index("changes") + 1))
    return gold, tally_votes(parses)


def gradient_check(model, sentence, seed=0, step=1e-5, max_coords=None):
    """Relative error between the analytic gradient and central differences.

    The probe objective is ``sum(U * scores) + sum(V * label_logits)`` with
    random ``U`` and ``V`` (gold heads drive the labeler). Frozen parameters and
    the unused score entries (root column, diagonal) are left out. Returns
    ``(relative_error, analytic_gradient)``.
    """
    rng = np.random.default_rng(seed)
    n = len(sentence)
    heads = sentence.gold.heads
    U = rng.normal(size=(n + 1, n + 1))
    U[:, 0] = 0.0
    U[np.diag_indices(n + 1)] = 0.0
    labelled = len(model.labels) > 0
    cache = model.forward(sentence, label_heads=heads if labelled else None)
    V = rng.normal(size=cache.label_logits.shape) if labelled else None

    def objective(params):
        saved = model.params.copy()
        model.params[:] = params
        try:
            c = model.forward(sentence, label_heads=heads if labelled else None)
            total = float((U * c.scores).sum())
            if labelled:
                total += float((V * c.label_logits).sum())
            return total
        finally:
            model.params[:] = saved

    analytic = model.backward(sentence, U, cache, V)
    coords = np.flatnonzero(~model.frozen_mask())
    if max_coords is not None and len(coords) > max_coords:
        # every coordinate with a nonzero gradient, plus a sample of the rest
        live = coords[analytic[coords] != 0]
        rest = np.setdiff1d(coords, live)
        extra = rng.choice(rest, size=min(len(rest), max(max_coords - len(live), 0)), replace=False)
        coords = np.sort(np.concatenate([live, extra]))
    base = model.params.copy()
    numeric = np.zeros(len(coords))
    for k, i in enumerate(coords):
        plus, minus = base.copy(), base.copy()
        plus[i] += step
        minus[i] -= step
        numeric[k] = (objective(plus) - objective(minus)) / (2 * step)
    a = analytic[coords]
    denom = max(np.linalg.norm(a) + np.linalg.norm(numeric), 1e-300)
    return float(np.linalg.norm(a - numeric) / denom), analytic


def gradcheck_configs():
    """20 seeded (variant, treebank, config, embeddings) settings."""
    out = []
    for i in range(20):
        rng = np.random.default_rng(i)
        tb = generate_treebank(3, seed=100 + i)
        if i % 2 == 0 or i >= 10:
            cfg = {
                "seed": i,
                "word_dim": int(rng.integers(2, 6)),
                "pos_dim": int(rng.integers(2, 5)),
                "lstm_dim": int(rng.integers(2, 5)),
                "lstm_layers": int(rng.integers(1, 3)),
                "hidden_dim": int(rng.integers(2, 6)),
                "label_hidden_dim": int(rng.integers(2, 5)),
            }
            emb = toy_embeddings(dimension=3, seed=i) if i % 4 == 0 else None
            out.append(("bilstm", tb, cfg, emb))
        else:
            out.append(("linear", tb, {"seed": i, "init_scale": 0.3}, None))
    return out


# criterion number -> "PASS/FAIL criterion N: ..." line, filled by the acceptance suite
ACCEPTANCE_LINES = {}


def record_criterion(number, description, ok, elapsed, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"{status} criterion {number}: {description} ({elapsed:.1f} s){' ' + detail if detail else ''}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok

"""Decoding a score matrix into a dependency tree.

Run with ``python3 demos/01_decoding.py``.
"""

import numpy as np

from distill_parse import brute_force_decode, cle_decode, eisner_decode, tree_score

# A score matrix is indexed scores[head, modifier]; row 0 is the root.
# Column 0 and the diagonal are never used.
rng = np.random.default_rng(0)
n = 5
scores = rng.normal(size=(n + 1, n + 1))

# Eisner searches projective trees, Chu-Liu-Edmonds all spanning trees.
projective = eisner_decode(scores)
spanning = cle_decode(scores)
print("eisner heads:", projective.heads, "score %.4f" % tree_score(scores, projective))
print("cle heads:   ", spanning.heads, "score %.4f" % tree_score(scores, spanning))

# For short sentences every tree can be enumerated, which gives an exact check.
best_proj, _ = brute_force_decode(scores, projective_only=True)
best_all, _ = brute_force_decode(scores)
print("brute force: projective %.4f, all trees %.4f" % (best_proj, best_all))
assert tree_score(scores, projective) == best_proj
assert tree_score(scores, spanning) == best_all

# Without the single-root constraint the root may take several dependents.
print("multi-root cle:", cle_decode(scores, single_root=False).heads)

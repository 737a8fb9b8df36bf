"""How the distillation cost differs from Hamming cost.

Run with ``python3 demos/03_distillation_cost.py``.
"""

import numpy as np

from distill_parse import CostSpec, ParseTree, per_arc_cost, tally_votes

# Word 8 has seven candidate heads. Twenty-one ensemble members voted for
# them as follows; word 4 is the gold head.
candidates = ["go", "work", "modification", "changes", "system", "pump", "stations"]
counts = [3, 2, 4, 6, 2, 4, 0]
parses = []
for head, count in enumerate(counts, start=1):
    parses += [ParseTree((0, 1, 1, 1, 1, 1, 1, head))] * count
votes = tally_votes(parses)
gold = ParseTree((0, 1, 1, 1, 1, 1, 1, 4))

hamming = per_arc_cost(gold, CostSpec("hamming"))
distill = per_arc_cost(gold, CostSpec("distillation", votes))

# Hamming charges every wrong head the same. The distillation cost charges
# less for heads the ensemble also found plausible.
print("%-14s %6s %8s %8s" % ("head", "votes", "hamming", "distill"))
for i, word in enumerate(candidates, start=1):
    print("%-14s %6d %8.3f %8.3f" % (word, counts[i - 1], hamming[i, 8], distill[i, 8]))

# With every member voting for the gold tree, both costs coincide exactly.
unanimous = tally_votes([gold] * 5)
assert np.array_equal(per_arc_cost(gold, CostSpec("distillation", unanimous)), hamming)

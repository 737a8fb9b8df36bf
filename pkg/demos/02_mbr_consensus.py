"""Combining several parses of a sentence into one consensus tree.

Run with ``python3 demos/02_mbr_consensus.py``.
"""

from distill_parse import ParseTree, mbr_parse, tally_votes

# Three parsers disagree about where "with a telescope" (word 5) attaches.
#            I  saw  her  with  a  telescope
parses = [
    ParseTree((2, 0, 2, 6, 6, 2), ("nsubj", "root", "obj", "case", "det", "obl")),
    ParseTree((2, 0, 2, 6, 6, 3), ("nsubj", "root", "obj", "case", "det", "nmod")),
    ParseTree((2, 0, 2, 6, 6, 2), ("nsubj", "root", "obj", "case", "det", "obl")),
]
votes = tally_votes(parses)

# Attachment posteriors are vote fractions; each word's column sums to 1.
print("posterior of telescope's heads:", votes.posteriors()[:, 6])

# The consensus tree maximizes summed posteriors, which minimizes the expected
# number of head errors. Labels come from a plurality vote per arc.
tree = mbr_parse(votes)
print("consensus heads: ", tree.heads)
print("consensus labels:", tree.labels)

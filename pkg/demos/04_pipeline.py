"""The full pipeline on a small synthetic treebank, through the command line.

Steps: generate data, build jackknifed votes, train with Hamming and with
distillation cost, combine an ensemble and evaluate everything.
Run with ``python3 demos/04_pipeline.py`` (about a minute on one core).
"""

import tempfile
from pathlib import Path

from distill_parse.cli import main

work = Path(tempfile.mkdtemp(prefix="distill-demo-"))
train, dev = str(work / "train.conllu"), str(work / "dev.conllu")
fast = ["--variant", "linear", "--learning-rate", "0.01", "--epochs", "3", "--seed", "0"]

main(["generate", "--sentences", "200", "--seed", "1", "--pp-noise", "0.1", "--out", train])
main(["generate", "--sentences", "100", "--seed", "2", "--pp-noise", "0.1", "--out", dev])

# Every training sentence is parsed by models that never saw it.
votes = str(work / "votes.txt")
main(["jackknife-votes", "--treebank", train, "--folds", "2", "--models", "4", "--out", votes, *fast])

main(["train", "--treebank", train, "--dev", dev, "--model", str(work / "hamming.npz"), *fast])
main(["distill", "--treebank", train, "--votes", votes, "--dev", dev, "--model", str(work / "distilled.npz"), *fast])

# A small ensemble: five quickly trained parsers from random starting points,
# combined by consensus. Diverse members make the vote informative.
member_cfg = work / "member.cfg"
member_cfg.write_text("scorer.init_scale = 0.5\nepochs = 1\nlabel_loss = false\n")
members = []
for seed in range(5):
    model = str(work / f"member{seed}.npz")
    out = str(work / f"member{seed}.conllu")
    main(["train", "--treebank", train, "--model", model, "--config", str(member_cfg),
          "--variant", "linear", "--learning-rate", "0.01", "--seed", str(seed)])
    main(["parse", "--model", model, "--treebank", dev, "--out", out])
    members.append(out)
main(["ensemble", *members, "--out", str(work / "ensemble.conllu")])

for name in ("hamming", "distilled"):
    main(["parse", "--model", str(work / f"{name}.npz"), "--treebank", dev, "--out", str(work / f"{name}.conllu")])
for name in ("hamming", "distilled", "member0", "ensemble"):
    print(f"== {name}")
    main(["eval", "--gold", dev, "--pred", str(work / f"{name}.conllu"), "--report", "text"])
print("outputs in", work)

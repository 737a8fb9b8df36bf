"""Vote tables over ensembles of parses, MBR consensus, and jackknifed votes."""

from __future__ import annotations

import io
import logging
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .decoders import decode
from .treebank import ParseTree, Sentence, read_conll

logger = logging.getLogger(__name__)

VOTES_MAGIC = "# distill-parse votes v1"


@dataclass(frozen=True)
class VoteTable:
    """Attachment votes of ``size`` parsers over an ``n``-word sentence.

    ``head_votes[h, m]`` counts the parsers attaching word ``m`` to ``h``;
    ``label_votes[(h, m)]`` maps each label to how many of those parsers chose it.
    """

    head_votes: np.ndarray
    size: int
    label_votes: Mapping = field(default_factory=dict)
    sentence_id: str = ""

    def __post_init__(self):
        hv = np.array(self.head_votes, dtype=np.int64)
        hv.setflags(write=False)
        object.__setattr__(self, "head_votes", hv)
        n = hv.shape[0] - 1
        if hv.ndim != 2 or hv.shape != (n + 1, n + 1) or n < 1:
            raise ValueError(f"head_votes must be (n+1, n+1), got {hv.shape}")
        if self.size < 1:
            raise ValueError("a vote table needs at least one voter")
        if (hv < 0).any() or hv[:, 0].any() or np.diag(hv).any():
            raise ValueError("votes must be non-negative, with no root column or self-loop votes")
        sums = hv[:, 1:].sum(axis=0)
        if (sums != self.size).any():
            bad = int(np.flatnonzero(sums != self.size)[0]) + 1
            raise ValueError(f"word {bad} has {sums[bad - 1]} votes, expected {self.size}")
        labels = {}
        for (h, m), tally in self.label_votes.items():
            tally = Counter({k: v for k, v in dict(tally).items() if v})
            if sum(tally.values()) != hv[h, m]:
                raise ValueError(f"label votes for arc ({h}, {m}) do not sum to its head votes")
            if tally:
                labels[(int(h), int(m))] = tally
        object.__setattr__(self, "label_votes", labels)

    @property
    def n(self) -> int:
        return self.head_votes.shape[0] - 1

    def posteriors(self) -> np.ndarray:
        """``votes / N`` as floats; column ``m`` sums to 1 for every word."""
        return self.head_votes / float(self.size)

    def pi(self) -> np.ndarray:
        return (self.size - self.head_votes) / float(self.size)

    def plurality_label(self, h: int, m: int) -> str:
        """Most-voted label for arc ``(h, m)``; ties go to the smallest label string.

        An arc nobody voted for takes the plurality label over all of ``m``'s votes.
        """
        tally = self.label_votes.get((h, m))
        if not tally:
            tally = Counter()
            for (hh, mm), t in self.label_votes.items():
                if mm == m:
                    tally.update(t)
        if not tally:
            return ""
        return min(tally.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def tally_votes(parses: Sequence[ParseTree], n: Optional[int] = None, sentence_id: str = "") -> VoteTable:
    """Count how many parses include each attachment (and each labeled attachment)."""
    if not parses:
        raise ValueError("cannot tally votes over zero parses")
    n = len(parses[0]) if n is None else n
    hv = np.zeros((n + 1, n + 1), dtype=np.int64)
    labels: dict = {}
    for tree in parses:
        if len(tree) != n:
            raise ValueError(f"parse of length {len(tree)} in an ensemble over {n} words")
        for (h, m), lab in zip(tree.arcs(), tree.labels):
            hv[h, m] += 1
            labels.setdefault((h, m), Counter())[lab] += 1
    return VoteTable(hv, len(parses), labels, sentence_id)


def mbr_parse(votes: VoteTable, decoder: str = "cle", single_root: bool = True) -> ParseTree:
    """Consensus tree maximizing summed attachment posteriors, with plurality labels.

    Under Hamming cost this is the minimum-expected-cost tree for the empirical
    distribution of the ensemble's parses. The decoder runs on the integer vote
    counts, which rank trees exactly as the posteriors do but sum without
    rounding.
    """
    tree = decode(votes.head_votes.astype(np.float64), decoder, single_root)
    return tree.with_labels([votes.plurality_label(h, m) for h, m in tree.arcs()])


def read_ensemble(paths: Sequence[str], format: str = "conllu") -> list:
    """Read N parallel CoNLL files; returns one list of sentences per file.

    Files must be sentence-aligned (same count, same word forms) and every
    sentence must carry a tree.
    """
    if not paths:
        raise ValueError("an ensemble needs at least one parse file")
    members = [read_conll(p, format) for p in paths]
    ref = members[0]
    for path, member in zip(paths, members):
        if len(member) != len(ref):
            raise ValueError(f"{path}: {len(member)} sentences, expected {len(ref)}")
        for i, (a, b) in enumerate(zip(ref, member)):
            if a.forms != b.forms:
                raise ValueError(f"{path}: sentence {i + 1} is not aligned with {paths[0]}")
            if b.gold is None:
                raise ValueError(f"{path}: sentence {i + 1} has no tree")
    return members


def consensus(members: Sequence[Sequence[Sentence]], decoder: str = "cle", single_root: bool = True):
    """MBR consensus over aligned ensemble members; returns ``(trees, votes)``."""
    trees, tables = [], []
    for group in zip(*members):
        sid = group[0].sentence_id
        table = tally_votes([s.gold for s in group], len(group[0]), sid)
        tables.append(table)
        trees.append(mbr_parse(table, decoder, single_root))
    return trees, tables


@dataclass(frozen=True)
class JackknifePlan:
    k: int
    fold_of_sentence: Mapping
    seed: int = 0

    def fold_members(self, fold: int) -> list:
        return [sid for sid, f in self.fold_of_sentence.items() if f == fold]

    def fold_sizes(self) -> list:
        counts = Counter(self.fold_of_sentence.values())
        return [counts.get(f, 0) for f in range(self.k)]


def jackknife_split(sentences: Sequence[Sentence], k: int = 5, seed: int = 0) -> JackknifePlan:
    """Seeded balanced partition of the sentences into ``k`` folds."""
    if k < 2:
        raise ValueError(f"jackknifing needs at least 2 folds, got {k}")
    if len(sentences) < k:
        raise ValueError(f"{len(sentences)} sentences cannot fill {k} folds")
    ids = [s.sentence_id for s in sentences]
    if len(set(ids)) != len(ids):
        raise ValueError("sentence ids must be unique for jackknifing")
    order = list(range(len(ids)))
    random.Random(seed).shuffle(order)
    folds = {ids[i]: pos % k for pos, i in enumerate(order)}
    return JackknifePlan(k, {sid: folds[sid] for sid in ids}, seed)


@dataclass(frozen=True)
class ModelRecord:
    model_id: int
    seed: int
    parses_fold: int
    trained_on: frozenset


@dataclass
class VoteProvenance:
    """Which models voted on which sentence, and what each model was trained on."""

    plan: Optional[JackknifePlan] = None
    models: dict = field(default_factory=dict)
    voters: dict = field(default_factory=dict)

    def leaks(self) -> list:
        """``(sentence_id, model_id)`` pairs where a voter was trained on the sentence."""
        if self.plan is None:
            return []
        out = []
        for sid, ids in self.voters.items():
            fold = self.plan.fold_of_sentence.get(sid)
            for mid in ids:
                rec = self.models.get(mid)
                if fold is None or rec is None or fold in rec.trained_on:
                    out.append((sid, mid))
        return out


def assign_models(plan: JackknifePlan, total_models: int, base_seed: int = 0) -> list:
    """Round-robin models over folds; model ``j`` parses fold ``j % k``."""
    if total_models < plan.k:
        raise ValueError(f"{total_models} models cannot cover {plan.k} folds")
    records = []
    for j in range(total_models):
        fold = j % plan.k
        others = frozenset(f for f in range(plan.k) if f != fold)
        records.append(ModelRecord(j, base_seed + 7919 * (j + 1), fold, others))
    return records


def _train_and_parse(job):
    from .training import parse_sentences, train

    record, train_set, held_out, config, embeddings = job
    cfg = config.replace(seed=record.seed)
    try:
        result = train(train_set, None, cfg, embeddings=embeddings)
    except Exception as exc:
        raise RuntimeError(f"fold {record.parses_fold} (model {record.model_id}) failed: {exc}") from exc
    return record, parse_sentences(result.model, held_out, cfg.decoder, cfg.single_root)


def build_training_votes(
    treebank: Sequence[Sentence],
    plan: JackknifePlan,
    config,
    total_models: int,
    jobs: int = 1,
    embeddings=None,
):
    """Jackknifed votes for every training sentence.

    Each model is trained on every fold except the one it parses, from its own
    seed. Returns ``(votes, provenance)`` where ``votes`` maps sentence id to a
    :class:`VoteTable`.
    """
    by_id = {s.sentence_id: s for s in treebank}
    if set(by_id) != set(plan.fold_of_sentence):
        raise ValueError("the jackknife plan does not cover the treebank")
    records = assign_models(plan, total_models, config.seed)
    jobs_list = []
    for rec in records:
        train_set = [s for s in treebank if plan.fold_of_sentence[s.sentence_id] != rec.parses_fold]
        held_out = [s for s in treebank if plan.fold_of_sentence[s.sentence_id] == rec.parses_fold]
        jobs_list.append((rec, train_set, held_out, config, embeddings))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_and_parse, jobs_list))
    else:
        results = [_train_and_parse(j) for j in jobs_list]

    parses: dict = {sid: [] for sid in by_id}
    voters: dict = {sid: [] for sid in by_id}
    for (rec, _, held_out, _, _), (_, trees) in zip(jobs_list, results):
        for sent, tree in zip(held_out, trees):
            parses[sent.sentence_id].append(tree)
            voters[sent.sentence_id].append(rec.model_id)
    votes = {
        sid: tally_votes(parses[sid], len(by_id[sid]), sid) for sid in by_id
    }
    prov = VoteProvenance(plan, {r.model_id: r for r in records}, {k: tuple(v) for k, v in voters.items()})
    return votes, prov


def format_votes(votes: Mapping, provenance: Optional[VoteProvenance] = None) -> str:
    """Serialize vote tables (and optional jackknife provenance) as text.

    ::

        # distill-parse votes v1
        # plan k=<folds> seed=<seed>
        # model <id> seed=<seed> parses=<fold> trained_on=<f,f,...>
        # sentence <id> n=<words> size=<N> [fold=<f> voters=<id,id,...>]
        <sentence_id> <m> <h> <count> [<label>:<count> ...]

    Only non-zero counts are listed; an empty label is written as ``_``.
    """
    out = [VOTES_MAGIC]
    prov = provenance or VoteProvenance()
    if prov.plan is not None:
        out.append(f"# plan k={prov.plan.k} seed={prov.plan.seed}")
        for rec in prov.models.values():
            trained = ",".join(str(f) for f in sorted(rec.trained_on))
            out.append(f"# model {rec.model_id} seed={rec.seed} parses={rec.parses_fold} trained_on={trained}")
    for sid, table in votes.items():
        if not sid or any(c.isspace() for c in sid):
            raise ValueError(f"sentence id {sid!r} cannot be serialized")
        header = f"# sentence {sid} n={table.n} size={table.size}"
        if prov.plan is not None and sid in prov.plan.fold_of_sentence:
            header += f" fold={prov.plan.fold_of_sentence[sid]}"
        if sid in prov.voters:
            header += " voters=" + ",".join(str(v) for v in prov.voters[sid])
        out.append(header)
        hv = table.head_votes
        for m in range(1, table.n + 1):
            for h in np.flatnonzero(hv[:, m]):
                line = f"{sid} {m} {h} {hv[h, m]}"
                tally = table.label_votes.get((int(h), m), {})
                for lab, c in sorted(tally.items()):
                    line += f" {lab or '_'}:{c}"
                out.append(line)
    return "\n".join(out) + "\n"


def _fields(tokens: Iterable[str]) -> dict:
    return dict(t.split("=", 1) for t in tokens)


def parse_votes(text: str):
    """Inverse of :func:`format_votes`; returns ``(votes, provenance)``."""
    lines = io.StringIO(text).read().splitlines()
    if not lines or lines[0].strip() != VOTES_MAGIC:
        raise ValueError("not a distill-parse votes file (missing version header)")
    plan_k = plan_seed = None
    models: dict = {}
    headers: dict = {}
    rows: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "#":
                kind = parts[1]
                if kind == "plan":
                    f = _fields(parts[2:])
                    plan_k, plan_seed = int(f["k"]), int(f["seed"])
                elif kind == "model":
                    f = _fields(parts[3:])
                    trained = frozenset(int(x) for x in f["trained_on"].split(",") if x)
                    mid = int(parts[2])
                    models[mid] = ModelRecord(mid, int(f["seed"]), int(f["parses"]), trained)
                elif kind == "sentence":
                    headers[parts[2]] = _fields(parts[3:])
                continue
            sid, m, h, count = parts[0], int(parts[1]), int(parts[2]), int(parts[3])
            tally = {}
            for tok in parts[4:]:
                lab, c = tok.rsplit(":", 1)
                tally["" if lab == "_" else lab] = int(c)
            rows.setdefault(sid, []).append((h, m, count, tally))
        except (KeyError, ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: malformed votes line ({exc})") from exc

    votes = {}
    fold_of: dict = {}
    voters: dict = {}
    for sid in list(dict.fromkeys(list(headers) + list(rows))):
        entries = rows.get(sid, [])
        hdr = headers.get(sid, {})
        n = int(hdr["n"]) if "n" in hdr else max(max(h, m) for h, m, _, _ in entries)
        hv = np.zeros((n + 1, n + 1), dtype=np.int64)
        labels = {}
        for h, m, count, tally in entries:
            hv[h, m] = count
            if tally:
                labels[(h, m)] = tally
        size = int(hdr["size"]) if "size" in hdr else int(hv[:, 1].sum())
        votes[sid] = VoteTable(hv, size, labels, sid)
        if "fold" in hdr:
            fold_of[sid] = int(hdr["fold"])
        if "voters" in hdr:
            voters[sid] = tuple(int(v) for v in hdr["voters"].split(",") if v)
    plan = JackknifePlan(plan_k, fold_of, plan_seed) if plan_k is not None else None
    return votes, VoteProvenance(plan, models, voters)


def write_votes(path: str, votes: Mapping, provenance: Optional[VoteProvenance] = None):
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_votes(votes, provenance))


def read_votes(path: str):
    with open(path, encoding="utf-8") as f:
        return parse_votes(f.read())

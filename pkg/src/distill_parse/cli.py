"""``distill-parse`` command line: generate, train, parse, ensemble, jackknife-votes, distill, eval.

Exit codes: 0 success, 1 runtime failure (training diverged, bad input data),
2 usage or configuration error. The log level comes from ``DISTILL_PARSE_LOG``
(default ``WARNING``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import synthetic
from .config import PRESETS, ConfigError, read_config, resolve_config
from .ensemble import consensus, jackknife_split, build_training_votes, read_ensemble, read_votes, write_votes
from .evaluation import evaluate
from .scorers import TrainingError, load_model
from .training import parse_sentences, train
from .treebank import ConllError, read_conll, read_embeddings, write_conll, write_embeddings

logger = logging.getLogger("distill_parse")


class UsageError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("DISTILL_PARSE_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise UsageError(f"DISTILL_PARSE_LOG={level!r} is not a log level")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def _add_common(p, decoder=True, fmt=True):
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--language", choices=sorted(PRESETS), help="preset for decoder and punctuation")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")
    if decoder:
        p.add_argument("--decoder", choices=["eisner", "cle"])
    if fmt:
        p.add_argument("--format", choices=["conllx", "conllu"])


def _add_training(p):
    p.add_argument("--treebank", required=True, help="training treebank")
    p.add_argument("--dev", help="dev treebank for model selection")
    p.add_argument("--embeddings", help="pretrained word vectors (text format)")
    p.add_argument("--variant", choices=["bilstm", "linear"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distill-parse", description="First-order dependency parsing with ensemble distillation.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded synthetic treebank")
    p.add_argument("--sentences", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--pp-noise", type=float, default=0.0, dest="pp_noise")
    p.add_argument("--format", choices=["conllx", "conllu"], default="conllu")
    p.add_argument("--prefix", default="syn")
    p.add_argument("--embeddings-out", dest="embeddings_out", help="also write toy word vectors here")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a parser with hamming or distillation cost")
    _add_common(p)
    _add_training(p)
    p.add_argument("--cost", choices=["hamming", "distill"])
    p.add_argument("--votes", help="votes file (needed for --cost distill)")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--log", help="training log (default: <model>.log)")

    p = sub.add_parser("distill", help="train with distillation cost from a votes file")
    _add_common(p)
    _add_training(p)
    p.add_argument("--votes", help="jackknifed votes file")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--log")

    p = sub.add_parser("parse", help="parse a treebank with a trained model")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--treebank", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ensemble", help="MBR consensus over N parallel parse files")
    _add_common(p)
    p.add_argument("parses", nargs="+", help="parse files, or one directory of them")
    p.add_argument("--out", required=True, help="consensus parse file")
    p.add_argument("--votes", help="also write the vote tables here")

    p = sub.add_parser("jackknife-votes", help="jackknifed ensemble votes for a training treebank")
    _add_common(p)
    _add_training(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--models", type=int, help="total models over all folds")
    p.add_argument("--out", required=True, help="votes file")

    p = sub.add_parser("eval", help="UAS / LAS / UEM of predictions against gold")
    _add_common(p, decoder=False)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--punct", choices=["include", "exclude"])
    p.add_argument("--report", choices=["text", "keyvalue", "both"], default="both")
    return ap


_FLAG_KEYS = ("language", "seed", "jobs", "decoder", "format", "variant", "epochs", "learning_rate", "cost", "folds", "models", "punct")


def _config(args):
    flags = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    cfg = resolve_config(flags, file_values)
    if os.environ.get("CI") and cfg.seed is None and args.command != "eval":
        raise UsageError("--seed is required when CI is set")
    return cfg


def _read_treebank(path, fmt):
    if not Path(path).is_file():
        raise UsageError(f"treebank not found: {path}")
    return read_conll(path, fmt)


def _embeddings(args):
    path = getattr(args, "embeddings", None)
    if not path:
        return None
    if not Path(path).is_file():
        raise UsageError(f"embeddings not found: {path}")
    return read_embeddings(path)


def cmd_generate(args):
    seed = 0 if args.seed is None else args.seed
    if os.environ.get("CI") and args.seed is None:
        raise UsageError("--seed is required when CI is set")
    grammar = synthetic.Grammar(0)
    sents = synthetic.generate_treebank(args.sentences, seed, grammar, pp_noise=args.pp_noise, prefix=args.prefix)
    Path(args.out).write_bytes(write_conll(sents, format=args.format))
    if args.embeddings_out:
        Path(args.embeddings_out).write_bytes(write_embeddings(synthetic.toy_embeddings(grammar, seed=seed)))
    return 0


def _run_training(args, cfg, votes_path):
    tcfg = cfg.train_config()
    treebank = _read_treebank(args.treebank, cfg.format)
    dev = _read_treebank(args.dev, cfg.format) if args.dev else None
    votes = provenance = None
    if tcfg.cost == "distillation":
        if not votes_path:
            raise UsageError("distillation cost needs a votes file: pass --votes")
        if not Path(votes_path).is_file():
            raise UsageError(f"votes file not found: {votes_path}")
        votes, provenance = read_votes(votes_path)
    start = time.perf_counter()
    result = train(treebank, votes, tcfg, dev=dev, embeddings=_embeddings(args), provenance=provenance)
    logger.info("trained on %d sentences in %.1f s", len(treebank), time.perf_counter() - start)
    model = result.best_model or result.model
    model.save(args.model)
    Path(args.log or args.model + ".log").write_text(result.log_text(), encoding="utf-8")
    return 0


def cmd_train(args):
    return _run_training(args, _config(args), args.votes)


def cmd_distill(args):
    args.cost = "distill"
    return _run_training(args, _config(args), args.votes)


def _parse_chunk(job):
    model_path, sentences, decoder, single_root = job
    return parse_sentences(load_model(model_path), sentences, decoder, single_root)


def cmd_parse(args):
    cfg = _config(args)
    if not Path(args.model).is_file():
        raise UsageError(f"model not found: {args.model}")
    model = load_model(args.model)
    sentences = _read_treebank(args.treebank, cfg.format)
    start = time.perf_counter()
    jobs = max(1, cfg.jobs)
    if jobs > 1 and len(sentences) > jobs:
        size = -(-len(sentences) // jobs)
        chunks = [sentences[i:i + size] for i in range(0, len(sentences), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_parse_chunk, [(args.model, c, cfg.decoder, cfg.single_root) for c in chunks])
            trees = [t for part in parts for t in part]
    else:
        trees = parse_sentences(model, sentences, cfg.decoder, cfg.single_root)
    elapsed = time.perf_counter() - start
    rate = len(sentences) / elapsed if elapsed > 0 else float("inf")
    logger.info("parsed %d sentences in %.2f s (%.1f sentences/second)", len(sentences), elapsed, rate)
    Path(args.out).write_bytes(write_conll(sentences, trees, cfg.format))
    return 0


def cmd_ensemble(args):
    cfg = _config(args)
    paths = list(args.parses)
    if len(paths) == 1 and Path(paths[0]).is_dir():
        paths = sorted(str(p) for p in Path(paths[0]).iterdir() if p.is_file())
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"parse file not found: {p}")
    members = read_ensemble(paths, cfg.format)
    trees, tables = consensus(members, cfg.decoder, cfg.single_root)
    Path(args.out).write_bytes(write_conll(members[0], trees, cfg.format))
    if args.votes:
        write_votes(args.votes, {t.sentence_id or f"s{i + 1}": t for i, t in enumerate(tables)})
    logger.info("consensus of %d parsers over %d sentences", len(members), len(trees))
    return 0


def cmd_jackknife_votes(args):
    cfg = _config(args)
    treebank = _read_treebank(args.treebank, cfg.format)
    plan = jackknife_split(treebank, cfg.folds, cfg.train_config().seed)
    votes, prov = build_training_votes(
        treebank, plan, cfg.train_config(), cfg.models, jobs=max(1, cfg.jobs), embeddings=_embeddings(args)
    )
    leaks = prov.leaks()
    if leaks:
        raise RuntimeError(f"leakage audit failed for {len(leaks)} votes")
    write_votes(args.out, votes, prov)
    logger.info("wrote votes for %d sentences from %d models (%d folds)", len(votes), cfg.models, cfg.folds)
    return 0


def cmd_eval(args):
    cfg = _config(args)
    gold = _read_treebank(args.gold, cfg.format)
    pred = _read_treebank(args.pred, cfg.format)
    if any(s.gold is None for s in pred):
        raise UsageError(f"{args.pred}: every sentence needs predicted heads")
    report = evaluate(gold, [s.gold for s in pred], cfg.punct, cfg.punct_tags)
    if args.report in ("text", "both"):
        sys.stdout.write(report.as_text())
    if args.report == "both":
        sys.stdout.write("\n")
    if args.report in ("keyvalue", "both"):
        sys.stdout.write(report.as_keyvalue())
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "distill": cmd_distill,
    "parse": cmd_parse,
    "ensemble": cmd_ensemble,
    "jackknife-votes": cmd_jackknife_votes,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging()
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"distill-parse {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ConllError, TrainingError, ValueError, RuntimeError, OSError) as exc:
        print(f"distill-parse {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``contextcast <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import context_gen, synthetic
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig
from .errors import ContextcastError
from .evaluator import VARIANTS, MetricsReport, evaluate_split, run_ablation, variant_config
from .events import (
    Vocab, augmented_timeline, history_window, load_dataset, read_names,
    save_dataset, split_by_time,
)
from .model import from_checkpoint
from .trainer import fit

CONFIG_FLAGS = {
    "dim": int, "layers": int, "hg_layers": int, "history": int, "lr": float,
    "weight_decay": float, "max_epochs": int, "patience": int, "channels": int, "kernel": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file")
    for name, kind in CONFIG_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None)
    p.add_argument("--seed", type=int, default=None)


def _resolve_config(args) -> TrainConfig:
    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {n: getattr(args, n) for n in list(CONFIG_FLAGS) + ["seed"] if getattr(args, n, None) is not None}
    return cfg.with_(**overrides)


def _sidecar(ckpt_path) -> Path:
    return Path(str(ckpt_path) + ".data")


def _data_for(args) -> Path:
    if getattr(args, "data", None):
        return Path(args.data)
    side = _sidecar(args.ckpt)
    if side.exists():
        return Path(side.read_text(encoding="utf-8").strip())
    raise ContextcastError("no --data given and the checkpoint has no recorded dataset path")


def _emit_metrics(report: MetricsReport, as_json: bool, title: str = "") -> None:
    print(report.to_json() if as_json else report.table(title))


# subcommands ----------------------------------------------------------------


def cmd_gen_synthetic(args) -> int:
    spec = synthetic.PlantedSpec.from_file(args.spec) if args.spec else synthetic.PlantedSpec()
    if args.seed is not None:
        spec = synthetic.PlantedSpec(**{**{f.name: getattr(spec, f.name) for f in fields(spec)}, "seed": args.seed})
    vocab, splits, _ = synthetic.generate(spec)
    save_dataset(args.out, vocab, splits)
    Path(args.out, "planted_spec.txt").write_text(spec.to_text(), encoding="utf-8")
    bound = synthetic.context_blind_bound(splits)
    print(json.dumps({"out": str(args.out), "context_blind_hit1": bound}) if args.json
          else f"wrote {args.out}; context-blind HIT@1 bound on test = {bound:.4f}")
    return 0


def cmd_gen_contexts(args) -> int:
    docs = context_gen.read_corpus(args.corpus)
    vectors = context_gen.vectorize(docs)
    result = context_gen.kmeans(vectors, args.k, seed=args.seed, max_iter=args.max_iter)
    quads = context_gen.read_quadruples(args.quads)
    ev_map = context_gen.read_event_doc_map(args.map)
    events = context_gen.assign_contexts(quads, ev_map, result.labels)
    n_ent = int(events[:, [0, 2]].max()) + 1 if len(events) else 0
    n_rel = int(events[:, 1].max()) + 1 if len(events) else 0
    entities = read_names(args.entities) if args.entities else [f"e{i}" for i in range(n_ent)]
    relations = read_names(args.relations) if args.relations else [f"r{i}" for i in range(n_rel)]
    vocab = Vocab(entities, relations, [f"context{k}" for k in range(args.k)])
    vocab.validate(events)
    splits = split_by_time(events)
    save_dataset(args.out, vocab, splits)
    lines = [f"context{k}\t" + " ".join(terms) for k, terms in enumerate(context_gen.top_terms(vectors, result, args.top))]
    Path(args.out, "context_terms.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.out}: {len(events)} events, K={args.k}, inertia={result.inertia:.6f}")
    if vectors.empty.any():
        print(f"warning: {int(vectors.empty.sum())} documents have all-zero TF-IDF vectors", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    vocab, splits = load_dataset(args.data)
    log_file = open(args.log, "w", encoding="utf-8") if args.log else None
    try:
        class Tee:
            def write(self, s):
                sys.stdout.write(s)
                if log_file:
                    log_file.write(s)

            def flush(self):
                sys.stdout.flush()
                if log_file:
                    log_file.flush()

        ckpt = fit(vocab, splits, cfg, log=Tee(), log_time=not args.no_time)
    finally:
        if log_file:
            log_file.close()
    save_checkpoint(ckpt, args.out)
    _sidecar(args.out).write_text(str(Path(args.data).resolve()) + "\n", encoding="utf-8")
    print(f"saved {args.out} (epoch {ckpt.epoch}, valid MRR {ckpt.best_mrr:.4f})", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    vocab, splits = load_dataset(_data_for(args))
    report = evaluate_split(ckpt, vocab, splits, args.split,
                            filtered=True if args.filtered else None,
                            average=args.average)
    _emit_metrics(report, args.json, args.split)
    return 0


def cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    vocab, splits = load_dataset(args.data)
    variants = args.variants.split(",")
    for v in variants:
        if v not in VARIANTS:
            raise ContextcastError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
    results = {}
    full_ckpt = None
    for v in variants:
        if v in ("full", "avr-context"):
            # one trained full model serves both rows
            if full_ckpt is None:
                full_ckpt = fit(vocab, splits, variant_config(cfg, "full"))
            results[v] = run_ablation(v, vocab, splits, cfg, split=args.split, checkpoint=full_ckpt)
        else:
            results[v] = run_ablation(v, vocab, splits, cfg, split=args.split)
    if args.json:
        print(json.dumps({v: r.as_dict() for v, r in results.items()}, sort_keys=True))
    else:
        print(f"{'variant':<14}{'MRR':>9}{'HIT@1':>9}{'HIT@3':>9}{'HIT@10':>9}")
        for v, r in results.items():
            print(f"{v:<14}{r.mrr:>9.4f}{r.hit1:>9.4f}{r.hit3:>9.4f}{r.hit10:>9.4f}")
    return 0


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    vocab, splits = load_dataset(_data_for(args))
    ckpt.check_compatible(vocab.fingerprint())
    model = from_checkpoint(ckpt)
    timeline = augmented_timeline(splits, vocab.n_relations)
    at = len(timeline) if args.time is None else args.time
    if not 0 <= at <= len(timeline):
        raise ContextcastError(f"--time must lie in [0, {len(timeline)}]")
    act = model.activation("eval")
    history = history_window(timeline, at - 1, ckpt.config.history) if at >= 1 else []
    states = model.encode(history, act)
    probs = model.score_queries(states, [[args.subject, args.relation, args.context]], act)[0]
    order = np.lexsort((np.arange(len(probs)), -probs))[: args.top]
    rows = [{"id": int(i), "name": vocab.entities[i], "probability": float(probs[i])} for i in order]
    if args.json:
        print(json.dumps(rows))
    else:
        for r in rows:
            print(f"{r['id']}\t{r['name']}\t{r['probability']:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contextcast", description="Context-aware temporal event forecasting.")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap; computation is sequential, so only 1 is certified deterministic")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", help="write a planted-context dataset")
    p.add_argument("--spec", help="planted spec file ('key = value')")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gen-contexts", help="cluster source documents into contexts and write quintuples")
    p.add_argument("--quads", required=True, help="s<TAB>r<TAB>o<TAB>t per line")
    p.add_argument("--corpus", required=True, help="one document per line")
    p.add_argument("--map", required=True, help="event-line<TAB>doc-line per line (1-based)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--entities")
    p.add_argument("--relations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_contexts)

    p = sub.add_parser("train", help="fit a model and save a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="also write the epoch log here")
    p.add_argument("--no-time", action="store_true", help="omit the wall-clock column from the log")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data")
    p.add_argument("--split", default="test", choices=("train", "valid", "test"))
    p.add_argument("--filtered", action="store_true", help="time-aware filtered ranking")
    p.add_argument("--average", action="store_true", help="average all context heads")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and evaluate ablation variants")
    p.add_argument("--data", required=True)
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--split", default="test", choices=("valid", "test"))
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="top-n objects for one (subject, relation, context) query")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data")
    p.add_argument("--subject", type=int, required=True)
    p.add_argument("--relation", type=int, required=True)
    p.add_argument("--context", type=int, required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--time", type=int, help="query timestamp (default: right after the last one)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    if args.threads < 1:
        print("contextcast: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ContextcastError, OSError, ValueError) as exc:
        print(f"contextcast: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Ranking metrics, split evaluation, and the ablation variants."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .checkpoint import ModelCheckpoint
from .errors import ValidationError
from .events import (
    CTX, OBJ, REL, SUBJ, DatasetSplits, SnapshotSequence, Vocab,
    add_inverse_events, augmented_timeline, history_window,
)
from .model import ContextForecaster, from_checkpoint

HITS_AT = (1, 3, 10)
VARIANTS = ("full", "no-ent-hg", "no-rel-hg", "no-hg", "avr-context")


@dataclass
class MetricsReport:
    mrr: float
    hit1: float
    hit3: float
    hit10: float
    n_queries: int
    per_context: dict[int, dict] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "hit1": self.hit1,
            "hit3": self.hit3,
            "hit10": self.hit10,
            "n_queries": self.n_queries,
            "per_context": {str(k): v for k, v in sorted(self.per_context.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def table(self, title: str = "") -> str:
        head = f"{'':<14}{'MRR':>9}{'HIT@1':>9}{'HIT@3':>9}{'HIT@10':>9}{'n':>8}"
        rows = [head]
        rows.append(f"{title or 'all':<14}{self.mrr:>9.4f}{self.hit1:>9.4f}{self.hit3:>9.4f}{self.hit10:>9.4f}{self.n_queries:>8d}")
        for k, m in sorted(self.per_context.items()):
            rows.append(f"{'  context ' + str(k):<14}{m['mrr']:>9.4f}{m['hit1']:>9.4f}"
                        f"{m['hit3']:>9.4f}{m['hit10']:>9.4f}{m['n_queries']:>8d}")
        return "\n".join(rows)


def rank_of_truth(scores, truth: int) -> int:
    """1 + number of candidates scoring strictly higher than the truth."""
    scores = np.asarray(scores)
    if not 0 <= truth < len(scores):
        raise ValidationError(f"truth id {truth} out of range [0, {len(scores)})")
    return int(1 + np.count_nonzero(scores > scores[truth]))


def _summary(ranks: np.ndarray) -> dict:
    return {
        "mrr": float(np.mean(1.0 / ranks)),
        "hit1": float(np.mean(ranks <= 1)),
        "hit3": float(np.mean(ranks <= 3)),
        "hit10": float(np.mean(ranks <= 10)),
        "n_queries": int(len(ranks)),
    }


def compute_metrics(ranks: Sequence[int], contexts: Sequence[int] | None = None) -> MetricsReport:
    ranks = np.asarray(ranks, dtype=np.float64)
    if len(ranks) == 0:
        raise ValidationError("compute_metrics needs at least one rank")
    if np.any(ranks < 1):
        raise ValidationError("ranks are 1-based")
    overall = _summary(ranks)
    per = {}
    if contexts is not None:
        contexts = np.asarray(contexts)
        for c in np.unique(contexts):
            per[int(c)] = _summary(ranks[contexts == c])
    return MetricsReport(per_context=per, **overall)


def split_queries(seq: SnapshotSequence, t: int, n_relations: int, masked=frozenset(),
                  both_directions: bool = False) -> np.ndarray:
    events = seq.at(t)
    if both_directions:
        events = add_inverse_events(events, n_relations)
    if masked and len(events):
        keep = ~np.isin(events[:, OBJ], np.fromiter(masked, dtype=np.int64))
        events = events[keep]
    return events


def evaluate(model: ContextForecaster, timeline: Sequence[np.ndarray], split: SnapshotSequence,
             n_raw_relations: int, masked=frozenset(), *, filtered: bool = False,
             average: bool = False, both_directions: bool = False) -> MetricsReport:
    """Rank every (unmasked) query in ``split`` given the window before its timestamp.

    ``timeline`` is indexed by global time and already carries inverse
    events. Parameters are not touched.
    """
    act = model.activation("eval")
    depth = model.config.history
    ranks, ctxs = [], []
    for t in split.times:
        queries = split_queries(split, t, n_raw_relations, masked, both_directions)
        if len(queries) == 0:
            continue
        history = history_window(timeline, t - 1, depth) if t >= 1 else []
        states = model.encode(history, act)
        probs = model.score_queries(states, queries[:, [SUBJ, REL, CTX]], act, average=average)
        if filtered:
            truth_pool = timeline[t]
            for i, q in enumerate(queries):
                same = truth_pool[(truth_pool[:, SUBJ] == q[SUBJ]) & (truth_pool[:, REL] == q[REL])]
                others = np.setdiff1d(same[:, OBJ], [q[OBJ]])
                probs[i, others] = -np.inf
        for i, q in enumerate(queries):
            ranks.append(rank_of_truth(probs[i], int(q[OBJ])))
            ctxs.append(int(q[CTX]))
    if not ranks:
        raise ValidationError("no queries left to evaluate (empty split or everything masked)")
    return compute_metrics(ranks, ctxs)


def evaluate_split(ckpt: ModelCheckpoint, vocab: Vocab, splits: DatasetSplits, split: str = "test",
                   *, filtered: bool | None = None, average: bool = False,
                   both_directions: bool | None = None) -> MetricsReport:
    ckpt.check_compatible(vocab.fingerprint())
    model = from_checkpoint(ckpt)
    cfg = ckpt.config
    timeline = augmented_timeline(splits, vocab.n_relations)
    return evaluate(
        model, timeline, splits.split(split), vocab.n_relations, splits.masked_entities,
        filtered=cfg.filtered if filtered is None else filtered,
        average=average,
        both_directions=cfg.eval_inverse if both_directions is None else both_directions,
    )


def variant_config(config, variant: str):
    if variant not in VARIANTS:
        raise ValidationError(f"unknown ablation variant {variant!r}; choose from {', '.join(VARIANTS)}")
    flags = {
        "full": (True, True),
        "no-ent-hg": (False, True),
        "no-rel-hg": (True, False),
        "no-hg": (False, False),
        "avr-context": (True, True),
    }[variant]
    return config.with_(ent_hg=flags[0], rel_hg=flags[1])


def run_ablation(variant: str, vocab: Vocab, splits: DatasetSplits, config, *,
                 split: str = "test", checkpoint: ModelCheckpoint | None = None,
                 log=None) -> MetricsReport:
    """Train (unless ``checkpoint`` is given) and evaluate one ablation variant.

    ``avr-context`` trains the full model and averages all K heads at
    evaluation time; pass the full model's checkpoint to skip retraining.
    """
    from .trainer import fit

    cfg = variant_config(config, variant)
    if checkpoint is None:
        checkpoint = fit(vocab, splits, cfg, log=log)
    return evaluate_split(checkpoint, vocab, splits, split, average=(variant == "avr-context"))

"""Planted-context temporal event datasets and a context-blind frequency oracle.

The true object of every non-noise event is a fixed function of
(subject, relation, context). For context-dependent (s, r) pairs the K
contexts map to K distinct objects, so no predictor that ignores the
context can exceed roughly 1/K HIT@1 on those pairs.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, fields

import numpy as np

from .config import parse_config_text
from .errors import ValidationError
from .events import DatasetSplits, OBJ, REL, SUBJ, Vocab, split_by_time


@dataclass(frozen=True)
class PlantedSpec:
    n_entities: int = 50
    n_relations: int = 5
    n_contexts: int = 3
    n_timestamps: int = 200
    events_per_timestamp: int = 40
    noise: float = 0.05
    context_dependence: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_entities", "n_relations", "n_contexts", "n_timestamps", "events_per_timestamp"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if not 0.0 <= self.noise < 1.0:
            raise ValidationError("noise must lie in [0, 1)")
        if not 0.0 <= self.context_dependence <= 1.0:
            raise ValidationError("context_dependence must lie in [0, 1]")
        if self.context_dependence > 0 and self.n_contexts > self.n_entities:
            raise ValidationError("context-dependent answers need K <= |E|")
        if self.n_timestamps < 3:
            raise ValidationError("need at least 3 timestamps for an 8/1/1 split")

    @classmethod
    def from_file(cls, path) -> "PlantedSpec":
        with open(path, encoding="utf-8") as fh:
            return cls(**parse_config_text(fh.read(), str(path), cls))

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))


def planted_map(spec: PlantedSpec) -> np.ndarray:
    """Table ``f[s, r, c]`` of planted objects, drawn from a generator seeded by ``spec.seed``."""
    rng = np.random.default_rng([spec.seed, 0])
    e, r, k = spec.n_entities, spec.n_relations, spec.n_contexts
    table = np.empty((e, r, k), dtype=np.int64)
    dependent = rng.random((e, r)) < spec.context_dependence
    for s in range(e):
        for x in range(r):
            if dependent[s, x]:
                table[s, x] = rng.choice(e, size=k, replace=False)
            else:
                table[s, x] = rng.integers(e)
    return table


def generate(spec: PlantedSpec) -> tuple[Vocab, DatasetSplits, np.ndarray]:
    """Sample the event stream; returns the vocab, 8/1/1 time splits, and the planted table."""
    table = planted_map(spec)
    rng = np.random.default_rng([spec.seed, 1])
    n = spec.events_per_timestamp
    rows = []
    for t in range(spec.n_timestamps):
        s = rng.integers(spec.n_entities, size=n)
        r = rng.integers(spec.n_relations, size=n)
        c = rng.integers(spec.n_contexts, size=n)
        o = table[s, r, c]
        noisy = rng.random(n) < spec.noise
        o = np.where(noisy, rng.integers(spec.n_entities, size=n), o)
        rows.append(np.column_stack([s, r, o, np.full(n, t), c]))
    events = np.concatenate(rows, axis=0)
    vocab = Vocab.numbered(spec.n_entities, spec.n_relations, spec.n_contexts)
    return vocab, split_by_time(events, spec.n_timestamps), table


def context_blind_bound(splits: DatasetSplits) -> float:
    """HIT@1 on test of predicting, per (s, r), the most frequent training object.

    Ties go to the smallest object id; (s, r) pairs unseen in training count
    as misses.
    """
    test = splits.test.events()
    if len(test) == 0:
        raise ValidationError("context_blind_bound needs a non-empty test split")
    counts: dict[tuple[int, int], Counter] = defaultdict(Counter)
    for s, r, o in splits.train.events()[:, [SUBJ, REL, OBJ]]:
        counts[(int(s), int(r))][int(o)] += 1
    best = {}
    for key, ctr in counts.items():
        top = max(ctr.values())
        best[key] = min(o for o, n in ctr.items() if n == top)
    hits = sum(best.get((int(s), int(r))) == int(o) for s, r, o in test[:, [SUBJ, REL, OBJ]])
    return hits / len(test)

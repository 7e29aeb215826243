"""Quintuple events, vocabularies, snapshot sequences and dataset I/O.

Events are kept as ``(n, 5)`` int64 arrays with columns
``subject, relation, object, time, context``. :class:`Quintuple` is the
single-event view.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ParseError, ValidationError

SUBJ, REL, OBJ, TIME, CTX = range(5)
SPLIT_FILES = ("train.txt", "valid.txt", "test.txt")


class Quintuple(NamedTuple):
    subject: int
    relation: int
    object: int
    time: int
    context: int


def as_events(events) -> np.ndarray:
    arr = np.asarray(events, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 5), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 5:
        raise ValidationError(f"events must have shape (n, 5), got {arr.shape}")
    return arr


def sort_events(events: np.ndarray) -> np.ndarray:
    """Stable order within a snapshot: (subject, relation, object, context)."""
    events = as_events(events)
    if len(events) == 0:
        return events
    order = np.lexsort((events[:, CTX], events[:, OBJ], events[:, REL], events[:, SUBJ]))
    return events[order]


@dataclass
class Vocab:
    entities: list[str]
    relations: list[str]
    contexts: list[str]

    def __post_init__(self):
        for kind, names in (("entity", self.entities), ("relation", self.relations), ("context", self.contexts)):
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate {kind} names in vocab")

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def n_contexts(self) -> int:
        return len(self.contexts)

    @classmethod
    def numbered(cls, n_entities: int, n_relations: int, n_contexts: int) -> "Vocab":
        return cls(
            [f"e{i}" for i in range(n_entities)],
            [f"r{i}" for i in range(n_relations)],
            [f"c{i}" for i in range(n_contexts)],
        )

    def fingerprint(self) -> tuple[int, int, int, str]:
        h = hashlib.sha256()
        for names in (self.entities, self.relations, self.contexts):
            h.update("\t".join(names).encode("utf-8"))
            h.update(b"\n")
        return (self.n_entities, self.n_relations, self.n_contexts, h.hexdigest())

    def validate(self, events: np.ndarray, n_relations: int | None = None) -> None:
        events = as_events(events)
        if len(events) == 0:
            return
        n_rel = self.n_relations if n_relations is None else n_relations
        limits = ((SUBJ, self.n_entities, "subject"), (OBJ, self.n_entities, "object"),
                  (REL, n_rel, "relation"), (CTX, self.n_contexts, "context"))
        for col, bound, what in limits:
            bad = (events[:, col] < 0) | (events[:, col] >= bound)
            if bad.any():
                row = int(np.argmax(bad))
                raise ValidationError(f"{what} id {events[row, col]} out of range [0, {bound}) in event {tuple(events[row])}")
        if (events[:, TIME] < 0).any():
            raise ValidationError("negative timestamp")


@dataclass
class SnapshotSequence:
    """Day-indexed snapshots; ``snapshots[i]`` holds the events at time ``start + i``."""

    start: int
    snapshots: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_events(cls, events, start: int | None = None, stop: int | None = None) -> "SnapshotSequence":
        events = as_events(events)
        if start is None:
            start = int(events[:, TIME].min()) if len(events) else 0
        if stop is None:
            stop = int(events[:, TIME].max()) + 1 if len(events) else start
        if len(events) and (events[:, TIME].min() < start or events[:, TIME].max() >= stop):
            raise ValidationError("event times fall outside the sequence range")
        snaps = [sort_events(events[events[:, TIME] == t]) for t in range(start, stop)]
        return cls(start, snaps)

    @property
    def horizon(self) -> int:
        return len(self.snapshots)

    @property
    def stop(self) -> int:
        return self.start + len(self.snapshots)

    @property
    def times(self) -> range:
        return range(self.start, self.stop)

    def at(self, t: int) -> np.ndarray:
        return self.snapshots[t - self.start]

    def events(self) -> np.ndarray:
        if not self.snapshots:
            return np.zeros((0, 5), dtype=np.int64)
        return np.concatenate(self.snapshots, axis=0)

    def __len__(self) -> int:
        return self.horizon


@dataclass
class DatasetSplits:
    train: SnapshotSequence
    valid: SnapshotSequence
    test: SnapshotSequence
    masked_entities: frozenset = frozenset()

    def __post_init__(self):
        if not (self.train.stop <= self.valid.start and self.valid.stop <= self.test.start):
            raise ValidationError("splits must be strictly ordered in time")

    def split(self, name: str) -> SnapshotSequence:
        if name not in ("train", "valid", "test"):
            raise ValidationError(f"unknown split {name!r}")
        return getattr(self, name)

    def timeline(self) -> list[np.ndarray]:
        """All snapshots indexed by global time, empty where no split covers a day."""
        stop = self.test.stop
        out = [np.zeros((0, 5), dtype=np.int64) for _ in range(stop)]
        for seq in (self.train, self.valid, self.test):
            for t in seq.times:
                out[t] = seq.at(t)
        return out


def add_inverse_events(events, n_relations: int) -> np.ndarray:
    """Append (o, r + |R|, s, t, c) for every (s, r, o, t, c)."""
    events = as_events(events)
    if len(events) and (events[:, REL].max() >= n_relations or events[:, REL].min() < 0):
        raise ValidationError(f"relation id out of range [0, {n_relations})")
    inv = events[:, [OBJ, REL, SUBJ, TIME, CTX]].copy()
    inv[:, 1] += n_relations
    return np.concatenate([events, inv], axis=0)


def partition_by_context(snapshot, n_contexts: int) -> list[np.ndarray]:
    """Split one snapshot into ``n_contexts`` disjoint, order-stable sub-graphs."""
    snapshot = as_events(snapshot)
    if len(snapshot) and (snapshot[:, CTX].max() >= n_contexts or snapshot[:, CTX].min() < 0):
        raise ValidationError(f"context id out of range [0, {n_contexts})")
    return [snapshot[snapshot[:, CTX] == k] for k in range(n_contexts)]


def history_window(seq, t: int, length: int) -> list[np.ndarray]:
    """Snapshots at times max(0, t-length+1) .. t inclusive.

    ``seq`` is a :class:`SnapshotSequence` or a list indexed by global time.
    """
    if t < 0:
        raise ValidationError(f"history_window needs t >= 0, got {t}")
    if length < 1:
        raise ValidationError(f"window length must be >= 1, got {length}")
    lo = max(0, t - length + 1)
    if isinstance(seq, SnapshotSequence):
        lo = max(lo, seq.start)
        return [seq.at(i) for i in range(lo, t + 1)]
    return [seq[i] for i in range(lo, t + 1)]


# ---------------------------------------------------------------- file I/O


def _read_rows(path: Path, arity: int) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != arity:
                raise ParseError(path, lineno, f"expected {arity} tab-separated fields, got {len(parts)}")
            rows.append((lineno, parts))
    return rows


def read_quintuples(path) -> np.ndarray:
    path = Path(path)
    out = []
    for lineno, parts in _read_rows(path, 5):
        try:
            out.append([int(p) for p in parts])
        except ValueError:
            raise ParseError(path, lineno, "non-integer field") from None
    return as_events(out)


def write_quintuples(path, events) -> None:
    events = as_events(events)
    with open(path, "w", encoding="utf-8") as fh:
        for row in events:
            fh.write("\t".join(str(int(x)) for x in row) + "\n")


def read_names(path) -> list[str]:
    path = Path(path)
    pairs = []
    for lineno, (name, idx) in _read_rows(path, 2):
        try:
            pairs.append((int(idx), name, lineno))
        except ValueError:
            raise ParseError(path, lineno, "non-integer id") from None
    pairs.sort()
    for expect, (idx, _, lineno) in enumerate(pairs):
        if idx != expect:
            raise ParseError(path, lineno, f"ids must be dense from 0; missing or duplicate id near {idx}")
    return [name for _, name, _ in pairs]


def write_names(path, names: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, name in enumerate(names):
            fh.write(f"{name}\t{i}\n")


def load_dataset(path) -> tuple[Vocab, DatasetSplits]:
    root = Path(path)
    if not root.is_dir():
        raise ValidationError(f"dataset directory not found: {root}")
    vocab = Vocab(
        read_names(root / "entity2id.txt"),
        read_names(root / "relation2id.txt"),
        read_names(root / "context2id.txt"),
    )
    stat = root / "stat.txt"
    if stat.exists():
        rows = _read_rows(stat, 3)
        if rows:
            lineno, parts = rows[0]
            try:
                counts = tuple(int(p) for p in parts)
            except ValueError:
                raise ParseError(stat, lineno, "non-integer field") from None
            if counts != (vocab.n_entities, vocab.n_relations, vocab.n_contexts):
                raise ValidationError(f"stat.txt {counts} disagrees with vocab sizes")
    seqs = []
    prev_stop = 0
    for name in SPLIT_FILES:
        events = read_quintuples(root / name)
        vocab.validate(events)
        if len(events):
            lo = int(events[:, TIME].min())
            if lo < prev_stop:
                raise ValidationError(f"{name}: timestamps overlap the previous split")
            start = prev_stop if name != "train" else 0
            seq = SnapshotSequence.from_events(events, start=start)
        else:
            seq = SnapshotSequence(prev_stop, [])
        seqs.append(seq)
        prev_stop = seq.stop
    masked = frozenset()
    mask_path = root / "masked_entities.txt"
    if mask_path.exists():
        ids = []
        for lineno, (tok,) in _read_rows(mask_path, 1):
            try:
                ids.append(int(tok))
            except ValueError:
                raise ParseError(mask_path, lineno, "non-integer entity id") from None
        if any(i < 0 or i >= vocab.n_entities for i in ids):
            raise ValidationError("masked entity id out of range")
        masked = frozenset(ids)
    return vocab, DatasetSplits(*seqs, masked_entities=masked)


def save_dataset(path, vocab: Vocab, splits: DatasetSplits) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    write_names(root / "entity2id.txt", vocab.entities)
    write_names(root / "relation2id.txt", vocab.relations)
    write_names(root / "context2id.txt", vocab.contexts)
    with open(root / "stat.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{vocab.n_entities}\t{vocab.n_relations}\t{vocab.n_contexts}\n")
    for name, seq in zip(SPLIT_FILES, (splits.train, splits.valid, splits.test)):
        write_quintuples(root / name, seq.events())
    if splits.masked_entities:
        with open(root / "masked_entities.txt", "w", encoding="utf-8") as fh:
            for i in sorted(splits.masked_entities):
                fh.write(f"{i}\n")


def split_by_time(events, n_timestamps: int | None = None, ratios=(0.8, 0.1, 0.1)) -> DatasetSplits:
    """Cut a time-sorted event stream into train/valid/test by timestamp."""
    events = as_events(events)
    if n_timestamps is None:
        n_timestamps = int(events[:, TIME].max()) + 1 if len(events) else 0
    n_train = int(round(n_timestamps * ratios[0]))
    n_valid = int(round(n_timestamps * ratios[1]))
    cuts = (0, n_train, n_train + n_valid, n_timestamps)
    seqs = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sel = events[(events[:, TIME] >= lo) & (events[:, TIME] < hi)]
        seqs.append(SnapshotSequence.from_events(sel, start=lo, stop=hi))
    return DatasetSplits(*seqs)


def augmented_timeline(splits: DatasetSplits, n_relations: int) -> list[np.ndarray]:
    """Global-time snapshots with inverse events added, each in stable order."""
    return [sort_events(add_inverse_events(s, n_relations)) for s in splits.timeline()]

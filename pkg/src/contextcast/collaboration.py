"""Cross-context hyperedge propagation.

Every entity (and relation) owns one hyperedge joining its per-context
embeddings. Each layer replaces an embedding with the mean of the same id's
embeddings in the *other* contexts it occurs in; layer outputs are summed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .events import CTX, OBJ, REL, SUBJ, as_events
from .tensor import Tensor, as_tensor


@dataclass
class HyperIncidence:
    """Boolean membership matrices: ``entities[v, c]`` is True iff c is in C_v."""

    entities: np.ndarray
    relations: np.ndarray

    def entity_contexts(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.entities[v]).tolist())

    def relation_contexts(self, x: int) -> set[int]:
        return set(np.flatnonzero(self.relations[x]).tolist())

    @property
    def unseen_entities(self) -> np.ndarray:
        return np.flatnonzero(~self.entities.any(axis=1))

    @property
    def unseen_relations(self) -> np.ndarray:
        return np.flatnonzero(~self.relations.any(axis=1))


def build_incidence(train_events, n_entities: int, n_relations: int, n_contexts: int,
                    with_inverse: bool = True) -> HyperIncidence:
    """Context sets from training events.

    ``n_relations`` is the raw relation count; with ``with_inverse`` the
    relation matrix has ``2 * n_relations`` rows and inverse ids share their
    base relation's contexts.
    """
    ev = as_events(train_events)
    ents = np.zeros((n_entities, n_contexts), dtype=bool)
    rels = np.zeros((n_relations, n_contexts), dtype=bool)
    if len(ev):
        ents[ev[:, SUBJ], ev[:, CTX]] = True
        ents[ev[:, OBJ], ev[:, CTX]] = True
        rels[ev[:, REL] % n_relations, ev[:, CTX]] = True
    if with_inverse:
        rels = np.concatenate([rels, rels], axis=0)
    return HyperIncidence(ents, rels)


def propagate(tables: Sequence, membership: np.ndarray, n_layers: int) -> list:
    """Hyperedge mean-of-others propagation.

    tables: K arrays or Tensors of shape (N, d); membership: (N, K) bool.
    Ids in fewer than two contexts, and (id, context) nodes outside the id's
    context set, receive zero messages. Plain arrays in, plain arrays out.
    """
    if n_layers < 0:
        raise ValidationError("hypergraph layer count must be >= 0")
    k = len(tables)
    membership = np.asarray(membership, dtype=bool)
    if membership.shape[1] != k:
        raise ValidationError(f"membership has {membership.shape[1]} contexts, got {k} tables")
    shape = tables[0].shape
    if any(t.shape != shape for t in tables) or shape[0] != membership.shape[0]:
        raise ValidationError("tables must share shape (N, d) matching membership rows")
    arrays = not any(isinstance(t, Tensor) for t in tables)
    sizes = membership.sum(axis=1)
    if n_layers == 0 or not (sizes >= 2).any():
        return [t if not arrays else np.array(t, dtype=np.float64) for t in tables]

    active = membership & (sizes >= 2)[:, None]
    inv = np.where(sizes >= 2, 1.0 / np.maximum(sizes - 1, 1), 0.0)
    send = [active[:, c].astype(np.float64)[:, None] for c in range(k)]
    recv = [(active[:, c] * inv)[:, None] for c in range(k)]
    layer = [as_tensor(t) for t in tables]
    out = list(layer)
    for _ in range(n_layers):
        nxt = []
        for c in range(k):
            acc = None
            for i in range(k):
                if i == c:
                    continue
                term = layer[i] * send[i]
                acc = term if acc is None else acc + term
            nxt.append(acc * recv[c])
        layer = nxt
        out = [o + m for o, m in zip(out, layer)]
    if arrays:
        return [o.data for o in out]
    return out

"""The full context-aware forecaster: K encoders, hyperedge collaboration, K decoder heads."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .checkpoint import ModelCheckpoint
from .collaboration import HyperIncidence, propagate
from .config import TrainConfig
from .decoder import DecoderParams, average_distributions, batch_loss, score_batch
from .encoder import ContextParams, RReLU, encode_context
from .errors import ValidationError
from .events import CTX, OBJ, REL, SUBJ, as_events, partition_by_context
from .numerics import ParamStore
from .tensor import Tensor

ContextStates = tuple[list[Tensor], list[Tensor]]


class ContextForecaster:
    """Parameters and forward computation for one dataset's id space.

    ``n_relations`` is the augmented count (raw relations plus inverses).
    """

    def __init__(self, n_entities: int, n_relations: int, n_contexts: int,
                 config: TrainConfig, incidence: HyperIncidence,
                 store: ParamStore | None = None):
        if n_contexts < 1:
            raise ValidationError("need at least one context")
        if incidence.entities.shape != (n_entities, n_contexts):
            raise ValidationError("entity incidence does not match (|E|, K)")
        if incidence.relations.shape != (n_relations, n_contexts):
            raise ValidationError("relation incidence does not match (|R'|, K)")
        self.n_entities = n_entities
        self.n_relations = n_relations
        self.n_contexts = n_contexts
        self.config = config
        self.incidence = incidence
        if store is None:
            store = ParamStore()
            rng = np.random.default_rng(config.seed)
            for c in range(n_contexts):
                ContextParams.create(store, f"enc{c}.", n_entities, n_relations,
                                     config.dim, config.layers, rng)
                DecoderParams.create(store, f"dec{c}.", config.dim, config.channels,
                                     config.kernel, rng)
        self.store = store
        self.encoders = [ContextParams.bind(store, f"enc{c}.", config.layers) for c in range(n_contexts)]
        self.decoders = [DecoderParams.bind(store, f"dec{c}.") for c in range(n_contexts)]

    def activation(self, mode: str, rng: np.random.Generator | None = None) -> RReLU:
        return RReLU(mode, rng, self.config.rrelu_lower, self.config.rrelu_upper)

    def parameter_count(self) -> int:
        return self.store.count()

    # forward --------------------------------------------------------------

    def encode(self, history: Sequence[np.ndarray], act) -> ContextStates:
        """Per-context evolution over the window, then hyperedge collaboration.

        ``history`` holds full snapshots (inverse events already added);
        they are split by context here.
        """
        parts = [partition_by_context(snap, self.n_contexts) for snap in history]
        ents, rels = [], []
        for c, params in enumerate(self.encoders):
            e, r = encode_context([p[c] for p in parts], params, act)
            ents.append(e)
            rels.append(r)
        p = self.config.hg_layers
        if self.config.ent_hg:
            ents = propagate(ents, self.incidence.entities, p)
        if self.config.rel_hg:
            rels = propagate(rels, self.incidence.relations, p)
        return ents, rels

    def score_context(self, states: ContextStates, context: int, subjects, relations, act) -> Tensor:
        ents, rels = states
        if not 0 <= context < self.n_contexts:
            raise ValidationError(f"context id {context} out of range [0, {self.n_contexts})")
        return score_batch(ents[context], rels[context], subjects, relations, self.decoders[context], act)

    def score_queries(self, states: ContextStates, queries, act, average: bool = False) -> np.ndarray:
        """Probability rows for (s, r, c) queries, returned in input order.

        With ``average`` every query is scored by all K heads and the rows are
        averaged, ignoring its context label.
        """
        q = np.asarray(queries, dtype=np.int64).reshape(-1, 3)
        out = np.zeros((len(q), self.n_entities))
        if average:
            blocks = [self.score_context(states, c, q[:, 0], q[:, 1], act).data for c in range(self.n_contexts)]
            for i in range(len(q)):
                out[i] = average_distributions([b[i] for b in blocks])
            return out
        for c in range(self.n_contexts):
            sel = np.flatnonzero(q[:, 2] == c)
            if len(sel):
                out[sel] = self.score_context(states, c, q[sel, 0], q[sel, 1], act).data
        if len(q) and (q[:, 2].min() < 0 or q[:, 2].max() >= self.n_contexts):
            raise ValidationError("query context out of range")
        return out

    def loss(self, history: Sequence[np.ndarray], targets, act) -> Tensor:
        """Mean cross-entropy of the target snapshot's events given the window."""
        targets = as_events(targets)
        if len(targets) == 0:
            raise ValidationError("empty target snapshot")
        states = self.encode(history, act)
        probs, truth = [], []
        for c in range(self.n_contexts):
            sub = targets[targets[:, CTX] == c]
            if len(sub) == 0:
                continue
            probs.append(self.score_context(states, c, sub[:, SUBJ], sub[:, REL], act))
            truth.append(sub[:, OBJ])
        return batch_loss(probs, truth)


def from_checkpoint(ckpt: ModelCheckpoint) -> ContextForecaster:
    n_e, n_r, k, _ = ckpt.fingerprint
    if ckpt.incidence_entities is None or ckpt.incidence_relations is None:
        raise ValidationError("checkpoint carries no hyperedge incidence")
    store = ParamStore()
    for name, value in ckpt.params.items():
        store.add(name, value)
        if name in ckpt.adam_m:
            store.m[name] = ckpt.adam_m[name].copy()
            store.v[name] = ckpt.adam_v[name].copy()
    store.step = ckpt.adam_step
    incidence = HyperIncidence(ckpt.incidence_entities.copy(), ckpt.incidence_relations.copy())
    return ContextForecaster(n_e, 2 * n_r, k, ckpt.config, incidence, store)


def to_checkpoint(model: ContextForecaster, fingerprint, epoch: int = 0, best_mrr: float = 0.0) -> ModelCheckpoint:
    store = model.store
    return ModelCheckpoint(
        config=model.config,
        fingerprint=tuple(fingerprint),
        params=store.snapshot(),
        adam_m={k: v.copy() for k, v in store.m.items()},
        adam_v={k: v.copy() for k, v in store.v.items()},
        adam_step=store.step,
        incidence_entities=model.incidence.entities.copy(),
        incidence_relations=model.incidence.relations.copy(),
        epoch=epoch,
        best_mrr=best_mrr,
    )

"""Per-context evolution encoder.

Within one context, each history step runs relational message passing over
that step's sub-graph, gates the result against the previous entity state,
and advances the relation state with a GRU fed by the pooled embeddings of
the entities each relation touched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .events import OBJ, REL, SUBJ, as_events
from .numerics import ParamStore, rrelu, xavier_init
from .tensor import Tensor, concat, matmul, sigmoid, take_rows, tanh

Activation = Callable[[Tensor], Tensor]


class RReLU:
    """RReLU bound to a mode and (for training) a random generator."""

    def __init__(self, mode: str = "eval", rng: np.random.Generator | None = None,
                 lower: float = 1.0 / 8.0, upper: float = 1.0 / 3.0):
        if mode == "train" and rng is None:
            raise ValidationError("train-mode RReLU needs a random generator")
        self.mode, self.rng, self.lower, self.upper = mode, rng, lower, upper

    def __call__(self, x):
        return rrelu(x, self.lower, self.upper, self.mode, self.rng)


GRU_NAMES = ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh")


@dataclass
class ContextParams:
    """Trainable tensors of one context's encoder (views into a ParamStore)."""

    entity: Tensor
    relation: Tensor
    w_neighbor: list[Tensor]
    w_self: list[Tensor]
    gate_w: Tensor
    gate_b: Tensor
    gru: dict[str, Tensor]

    @property
    def n_layers(self) -> int:
        return len(self.w_neighbor)

    @classmethod
    def create(cls, store: ParamStore, prefix: str, n_entities: int, n_relations: int,
               dim: int, n_layers: int, rng: np.random.Generator) -> "ContextParams":
        if n_layers < 1:
            raise ValidationError("at least one propagation layer is required")
        ent = store.add(f"{prefix}entity", xavier_init(n_entities, dim, rng))
        rel = store.add(f"{prefix}relation", xavier_init(n_relations, dim, rng))
        w1 = [store.add(f"{prefix}W1.{l}", xavier_init(dim, dim, rng)) for l in range(n_layers)]
        w2 = [store.add(f"{prefix}W2.{l}", xavier_init(dim, dim, rng)) for l in range(n_layers)]
        gate_w = store.add(f"{prefix}gate_w", xavier_init(dim, dim, rng))
        gate_b = store.add(f"{prefix}gate_b", np.zeros(dim))
        gru = {}
        for gate in "zrh":
            gru[f"W{gate}"] = store.add(f"{prefix}gru.W{gate}", xavier_init(2 * dim, dim, rng))
            gru[f"U{gate}"] = store.add(f"{prefix}gru.U{gate}", xavier_init(dim, dim, rng))
            gru[f"b{gate}"] = store.add(f"{prefix}gru.b{gate}", np.zeros(dim))
        return cls(ent, rel, w1, w2, gate_w, gate_b, gru)

    @classmethod
    def bind(cls, store: ParamStore, prefix: str, n_layers: int) -> "ContextParams":
        return cls(
            store[f"{prefix}entity"],
            store[f"{prefix}relation"],
            [store[f"{prefix}W1.{l}"] for l in range(n_layers)],
            [store[f"{prefix}W2.{l}"] for l in range(n_layers)],
            store[f"{prefix}gate_w"],
            store[f"{prefix}gate_b"],
            {k: store[f"{prefix}gru.{k}"] for k in GRU_NAMES},
        )


def object_mean_matrix(sub_graph: np.ndarray, n_entities: int) -> np.ndarray:
    """(|E|, n_events) matrix averaging each event's message into its object."""
    n = len(sub_graph)
    agg = np.zeros((n_entities, n))
    if n == 0:
        return agg
    obj = sub_graph[:, OBJ]
    counts = np.bincount(obj, minlength=n_entities).astype(np.float64)
    agg[obj, np.arange(n)] = 1.0 / counts[obj]
    return agg


def relation_pool_matrix(sub_graph: np.ndarray, n_relations: int, n_entities: int) -> np.ndarray:
    """(|R'|, |E|) matrix averaging the distinct entities each relation touches."""
    pool = np.zeros((n_relations, n_entities))
    if len(sub_graph) == 0:
        return pool
    pool[sub_graph[:, REL], sub_graph[:, SUBJ]] = 1.0
    pool[sub_graph[:, REL], sub_graph[:, OBJ]] = 1.0
    sizes = pool.sum(axis=1, keepdims=True)
    np.divide(pool, sizes, out=pool, where=sizes > 0)
    return pool


def _check_ids(sub_graph: np.ndarray, n_entities: int, n_relations: int) -> None:
    if len(sub_graph) == 0:
        return
    if sub_graph[:, [SUBJ, OBJ]].max() >= n_entities or sub_graph[:, [SUBJ, OBJ]].min() < 0:
        raise ValidationError("entity id out of range in sub-graph")
    if sub_graph[:, REL].max() >= n_relations or sub_graph[:, REL].min() < 0:
        raise ValidationError("relation id out of range in sub-graph")


def concurrent_encode(sub_graph, entity_in: Tensor, relation_in: Tensor,
                      w_neighbor: Sequence[Tensor], w_self: Sequence[Tensor],
                      act: Activation) -> Tensor:
    """Multi-layer relational message passing; returns the sum of all layer outputs.

    Each layer: ``e_o <- act(mean_{(s,r)->o} (e_s + r) W1 + e_o W2)``. Entities
    with no incoming event keep only the self term.
    """
    sub_graph = as_events(sub_graph)
    n_ent, dim = entity_in.shape
    if relation_in.shape[1] != dim:
        raise ValidationError(f"relation width {relation_in.shape[1]} != entity width {dim}")
    if len(w_neighbor) != len(w_self):
        raise ValidationError("w_neighbor and w_self must have one matrix per layer")
    for w in list(w_neighbor) + list(w_self):
        if w.shape != (dim, dim):
            raise ValidationError(f"kernel shape {w.shape} != {(dim, dim)}")
    _check_ids(sub_graph, n_ent, relation_in.shape[0])
    agg = object_mean_matrix(sub_graph, n_ent) if len(sub_graph) else None
    rel_msg = take_rows(relation_in, sub_graph[:, REL]) if agg is not None else None
    h = entity_in
    total = entity_in
    for w1, w2 in zip(w_neighbor, w_self):
        pre = matmul(h, w2)
        if agg is not None:
            msg = matmul(take_rows(h, sub_graph[:, SUBJ]) + rel_msg, w1)
            pre = pre + matmul(agg, msg)
        h = act(pre)
        total = total + h
    return total


def temporal_gate(prev: Tensor, curr: Tensor, gate_w: Tensor, gate_b: Tensor) -> Tensor:
    """Per-entity elementwise gate ``u = sigmoid(prev W + b)``; returns ``u*curr + (1-u)*prev``."""
    if prev.shape != curr.shape:
        raise ValidationError(f"gate inputs differ in shape: {prev.shape} vs {curr.shape}")
    if gate_w.shape != (prev.shape[1], prev.shape[1]):
        raise ValidationError("gate weight must be d x d")
    u = sigmoid(matmul(prev, gate_w) + gate_b)
    return u * curr + (1.0 - u) * prev


def gru_step(h: Tensor, x: Tensor, gru: dict[str, Tensor]) -> Tensor:
    z = sigmoid(matmul(x, gru["Wz"]) + matmul(h, gru["Uz"]) + gru["bz"])
    r = sigmoid(matmul(x, gru["Wr"]) + matmul(h, gru["Ur"]) + gru["br"])
    cand = tanh(matmul(x, gru["Wh"]) + matmul(r * h, gru["Uh"]) + gru["bh"])
    return (1.0 - z) * h + z * cand


def relation_step(sub_graph, rel_prev: Tensor, ent_t: Tensor, rel_base: Tensor,
                  gru: dict[str, Tensor]) -> Tensor:
    """Advance every relation one GRU step on input ``[base_r ; mean of touched entities]``."""
    sub_graph = as_events(sub_graph)
    n_rel, dim = rel_prev.shape
    if rel_base.shape != rel_prev.shape or ent_t.shape[1] != dim:
        raise ValidationError("relation_step shape mismatch")
    _check_ids(sub_graph, ent_t.shape[0], n_rel)
    pooled = matmul(relation_pool_matrix(sub_graph, n_rel, ent_t.shape[0]), ent_t)
    return gru_step(rel_prev, concat([rel_base, pooled], axis=1), gru)


def encode_context(history: Sequence[np.ndarray], params: ContextParams,
                   act: Activation) -> tuple[Tensor, Tensor]:
    """Run the evolution encoder over a time-ordered window of one context's sub-graphs.

    The window restarts from the base tables; returns the final entity and
    relation states.
    """
    ent, rel = params.entity, params.relation
    for sub_graph in history:
        fresh = concurrent_encode(sub_graph, ent, rel, params.w_neighbor, params.w_self, act)
        ent = temporal_gate(ent, fresh, params.gate_w, params.gate_b)
        rel = relation_step(sub_graph, rel, ent, params.relation, params.gru)
    return ent, rel

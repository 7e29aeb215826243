"""Per-context ConvTransE scoring heads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .numerics import ParamStore, cross_entropy, softmax_rows, xavier_init
from .tensor import Tensor, conv1d_same, matmul, stack, take_rows


@dataclass
class DecoderParams:
    conv_w: Tensor  # (F, 2, w)
    conv_b: Tensor  # (F,)
    proj_w: Tensor  # (F*d, d)
    proj_b: Tensor  # (d,)

    @classmethod
    def create(cls, store: ParamStore, prefix: str, dim: int, channels: int, width: int,
               rng: np.random.Generator) -> "DecoderParams":
        if width % 2 != 1:
            raise ValidationError("decoder kernel width must be odd to preserve length")
        conv = xavier_init(channels, 2 * width, rng).reshape(channels, 2, width)
        return cls(
            store.add(f"{prefix}conv_w", conv),
            store.add(f"{prefix}conv_b", np.zeros(channels)),
            store.add(f"{prefix}proj_w", xavier_init(channels * dim, dim, rng)),
            store.add(f"{prefix}proj_b", np.zeros(dim)),
        )

    @classmethod
    def bind(cls, store: ParamStore, prefix: str) -> "DecoderParams":
        return cls(*(store[f"{prefix}{n}"] for n in ("conv_w", "conv_b", "proj_w", "proj_b")))


def query_vectors(entities: Tensor, relations: Tensor, subjects, rels,
                  params: DecoderParams, act) -> Tensor:
    """ConvTransE query embedding: conv over stacked [e_s; r_r], activate, flatten, project, activate."""
    subjects = np.asarray(subjects, dtype=np.int64)
    rels = np.asarray(rels, dtype=np.int64)
    n_ent, dim = entities.shape
    if len(subjects) and (subjects.min() < 0 or subjects.max() >= n_ent):
        raise ValidationError(f"subject id out of range [0, {n_ent})")
    if len(rels) and (rels.min() < 0 or rels.max() >= relations.shape[0]):
        raise ValidationError(f"relation id out of range [0, {relations.shape[0]})")
    grid = stack([take_rows(entities, subjects), take_rows(relations, rels)], axis=1)  # B,2,d
    feat = act(conv1d_same(grid, params.conv_w, params.conv_b))  # B,F,d
    flat = feat.reshape(len(subjects), -1)
    return act(matmul(flat, params.proj_w) + params.proj_b)


def score_batch(entities: Tensor, relations: Tensor, subjects, rels,
                params: DecoderParams, act) -> Tensor:
    """Probability rows over all entities for a batch of (s, r) queries in one context."""
    q = query_vectors(entities, relations, subjects, rels, params, act)
    return softmax_rows(matmul(q, entities.T))


def score(query, entities, relations, params: DecoderParams, act) -> np.ndarray:
    """Single-query distribution; ``query`` is (subject, relation)."""
    s, r = query[0], query[1]
    return score_batch(entities, relations, [s], [r], params, act).data[0]


def predict(probabilities) -> int:
    """Argmax with ties going to the smallest id."""
    return int(np.argmax(np.asarray(probabilities)))


def batch_loss(prob_blocks: Sequence[Tensor], target_blocks: Sequence) -> Tensor:
    """Mean negative log-likelihood over all queries of all contexts."""
    total = sum(len(t) for t in target_blocks)
    if total == 0:
        raise ValidationError("batch_loss needs at least one query")
    loss = None
    for probs, targets in zip(prob_blocks, target_blocks):
        if len(targets) == 0:
            continue
        part = cross_entropy(probs, targets) * (len(targets) / total)
        loss = part if loss is None else loss + part
    return loss


def average_distributions(rows: Sequence[np.ndarray]) -> np.ndarray:
    """Mean of K probability rows (the context-averaged head)."""
    rows = [np.asarray(r, dtype=np.float64) for r in rows]
    if len(rows) == 1:
        return rows[0]
    acc = rows[0].copy()
    for r in rows[1:]:
        acc += r
    return acc / len(rows)

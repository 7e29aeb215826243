"""Context labels from source text: TF-IDF vectors clustered with seeded k-means."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .events import as_events

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Whitespace split, lowercase, strip non-alphanumerics, drop tokens shorter than 2."""
    out = []
    for raw in text.split():
        tok = _NON_ALNUM.sub("", raw.lower())
        if len(tok) >= 2:
            out.append(tok)
    return out


@dataclass
class DocVectors:
    terms: list[str]
    matrix: np.ndarray  # (N, |terms|), rows L2-normalized or all-zero
    empty: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]


def vectorize(documents: Sequence[Sequence[str]]) -> DocVectors:
    """TF-IDF with tf = count / doc length and idf = ln(N / df); terms sorted lexicographically."""
    n = len(documents)
    if n == 0:
        raise ValidationError("vectorize needs at least one document")
    terms = sorted({t for doc in documents for t in doc})
    if not terms:
        raise ValidationError("every document is empty")
    index = {t: i for i, t in enumerate(terms)}
    tf = np.zeros((n, len(terms)))
    for d, doc in enumerate(documents):
        for t in doc:
            tf[d, index[t]] += 1.0
        if doc:
            tf[d] /= len(doc)
    df = np.count_nonzero(tf > 0, axis=0)
    idf = np.log(n / df)
    mat = tf * idf
    norms = np.linalg.norm(mat, axis=1)
    empty = norms == 0
    mat[~empty] /= norms[~empty, None]
    return DocVectors(terms, mat, empty)


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: list[float]
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _cost(x: np.ndarray, center: np.ndarray) -> float:
    diff = x - center
    return math.fsum(np.einsum("nd,nd->n", diff, diff))


def kmeans(vectors, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """k-means++ seeding followed by Lloyd iterations until the assignment stops changing.

    A centroid update is only accepted when it does not raise that cluster's
    cost, and a point only moves to a strictly closer centroid, so the
    recorded inertia never increases.
    """
    x = np.asarray(vectors.matrix if isinstance(vectors, DocVectors) else vectors, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValidationError("kmeans needs a non-empty (N, D) matrix")
    n_distinct = len(np.unique(x, axis=0))
    if k < 1 or k > n_distinct:
        raise ValidationError(f"k={k} must lie in [1, {n_distinct}] (number of distinct vectors)")
    rng = np.random.default_rng(seed)

    distinct = np.unique(x, axis=0)
    centroids = [distinct[rng.integers(len(distinct))]]
    for _ in range(1, k):
        d2 = _sq_dists(distinct, np.array(centroids)).min(axis=1)
        probs = d2 / d2.sum()
        centroids.append(distinct[rng.choice(len(distinct), p=probs)])
    centroids = np.array(centroids)

    labels = np.argmin(_sq_dists(x, centroids), axis=1)
    history = [math.fsum(_sq_dists(x, centroids)[np.arange(len(x)), labels])]
    it = 0
    for it in range(1, max_iter + 1):
        for c in range(k):
            members = x[labels == c]
            if len(members) == 0:
                continue
            mean = members.mean(axis=0)
            if _cost(members, mean) <= _cost(members, centroids[c]):
                centroids[c] = mean
        d2 = _sq_dists(x, centroids)
        current = d2[np.arange(len(x)), labels]
        best = np.argmin(d2, axis=1)
        move = d2[np.arange(len(x)), best] < current
        new_labels = np.where(move, best, labels)
        cost = math.fsum(d2[np.arange(len(x)), new_labels])
        if not move.any():
            if cost < history[-1]:
                history.append(cost)
            break
        labels = new_labels
        history.append(cost)
    return KMeansResult(labels, centroids, history, it)


def top_terms(docs: DocVectors, result: KMeansResult, n: int = 10) -> list[list[str]]:
    """The ``n`` highest-weighted vocabulary terms of each centroid."""
    out = []
    for c in result.centroids:
        order = np.lexsort((np.arange(len(c)), -c))[:n]
        out.append([docs.terms[i] for i in order if c[i] > 0])
    return out


def assign_contexts(events, event_to_doc, labels) -> np.ndarray:
    """Turn (s, r, o, t) quadruples into quintuples using each event's document cluster.

    ``event_to_doc`` maps event row index to document index (dict or sequence).
    """
    quads = np.asarray(events, dtype=np.int64)
    if quads.size == 0:
        return np.zeros((0, 5), dtype=np.int64)
    if quads.ndim != 2 or quads.shape[1] != 4:
        raise ValidationError(f"expected (n, 4) quadruples, got {quads.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    ctx = np.empty(len(quads), dtype=np.int64)
    for i in range(len(quads)):
        try:
            doc = event_to_doc[i]
        except (KeyError, IndexError):
            raise ValidationError(f"event {i} {tuple(quads[i])} has no source document") from None
        if not 0 <= doc < len(labels):
            raise ValidationError(f"event {i} maps to unknown document {doc}")
        ctx[i] = labels[doc]
    return as_events(np.column_stack([quads, ctx]))


# file formats -------------------------------------------------------------


def read_corpus(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh.read().splitlines()]


def read_event_doc_map(path) -> dict[int, int]:
    """``event-line<TAB>doc-line`` pairs, both 1-based line numbers; returned 0-based."""
    out = {}
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected 'event-line<TAB>doc-line'")
            try:
                ev, doc = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, "non-integer line number") from None
            if ev < 1 or doc < 1:
                raise ParseError(path, lineno, "line numbers are 1-based")
            out[ev - 1] = doc - 1
    return out


def read_quadruples(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise ParseError(path, lineno, f"expected 4 tab-separated fields, got {len(parts)}")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise ParseError(path, lineno, "non-integer field") from None
    return np.asarray(rows, dtype=np.int64).reshape(-1, 4)

import math

import numpy as np
import pytest

from contextcast.decoder import (
    DecoderParams, average_distributions, batch_loss, predict, query_vectors, score, score_batch,
)
from contextcast.encoder import RReLU
from contextcast.errors import ValidationError
from contextcast.numerics import ParamStore, grad_check
from contextcast.tensor import Tensor

EVAL = RReLU("eval")
MID = (1 / 8 + 1 / 3) / 2


def _head(seed, dim=4, channels=3, width=3):
    store = ParamStore()
    return store, DecoderParams.create(store, "dec0.", dim, channels, width, np.random.default_rng(seed))


def direct_score(ent, rel, s, r, conv_w, conv_b, proj_w, proj_b):
    """Loop re-implementation: zero-padded 'same' conv, leaky activations, linear scoring."""
    act = lambda v: np.where(v > 0, v, MID * v)
    d = ent.shape[1]
    grid = np.stack([ent[s], rel[r]])
    F, _, w = conv_w.shape
    half = w // 2
    feat = np.zeros((F, d))
    for f in range(F):
        for j in range(d):
            acc = conv_b[f]
            for ch in range(2):
                for k in range(w):
                    pos = j + k - half
                    if 0 <= pos < d:
                        acc += conv_w[f, ch, k] * grid[ch, pos]
            feat[f, j] = acc
    q = act(act(feat).reshape(-1) @ proj_w + proj_b)
    logits = ent @ q
    e = np.exp(logits - logits.max())
    return e / e.sum()


class TestScore:
    def test_zero_weights_uniform(self):
        store, p = _head(0)
        for t in store.params.values():
            t.data[...] = 0.0
        rng = np.random.default_rng(0)
        probs = score((1, 0), Tensor(rng.normal(size=(6, 4))), Tensor(rng.normal(size=(2, 4))), p, EVAL)
        np.testing.assert_allclose(probs, np.full(6, 1 / 6), atol=1e-15)

    def test_sums_to_one(self):
        _, p = _head(1)
        rng = np.random.default_rng(1)
        probs = score_batch(Tensor(rng.normal(size=(7, 4))), Tensor(rng.normal(size=(3, 4))),
                            [0, 3, 6], [2, 1, 0], p, EVAL).data
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_matches_direct_evaluation(self):
        _, p = _head(7)
        rng = np.random.default_rng(7)
        p.conv_b.data[...] = rng.normal(size=3)
        p.proj_b.data[...] = rng.normal(size=4)
        ent, rel = rng.normal(size=(4, 4)), rng.normal(size=(2, 4))
        got = score((2, 1), Tensor(ent), Tensor(rel), p, EVAL)
        ref = direct_score(ent, rel, 2, 1, p.conv_w.data, p.conv_b.data, p.proj_w.data, p.proj_b.data)
        np.testing.assert_allclose(got, ref, atol=1e-13)

    def test_id_checks(self):
        _, p = _head(0)
        with pytest.raises(ValidationError):
            query_vectors(Tensor(np.zeros((3, 4))), Tensor(np.zeros((2, 4))), [3], [0], p, EVAL)
        with pytest.raises(ValidationError):
            query_vectors(Tensor(np.zeros((3, 4))), Tensor(np.zeros((2, 4))), [0], [2], p, EVAL)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValidationError):
            _head(0, width=4)

    def test_gradients(self):
        store, p = _head(3)
        rng = np.random.default_rng(3)
        ent = store.add("ent", rng.normal(size=(5, 4)))
        rel = store.add("rel", rng.normal(size=(2, 4)))

        def fn():
            probs = score_batch(ent, rel, [0, 4, 2], [1, 0, 1], p, EVAL)
            return batch_loss([probs], [[3, 1, 2]])

        assert grad_check(fn, store).passed(1e-5)


class TestPredict:
    def test_argmax(self):
        assert predict([0.1, 0.7, 0.2]) == 1

    def test_tie_smallest(self):
        assert predict([0.0, 0.1, 0.3, 0.0, 0.1, 0.3]) == 2


class TestBatchLoss:
    def test_certain(self):
        assert float(batch_loss([Tensor(np.array([[0.0, 1.0]]))], [[1]]).data) == 0.0

    def test_uniform_100(self):
        loss = batch_loss([Tensor(np.full((3, 100), 0.01))], [[0, 50, 99]])
        assert float(loss.data) == pytest.approx(math.log(100), abs=1e-12)

    def test_two_queries_across_contexts(self):
        a = Tensor(np.array([[0.5, 0.5, 0.0]]))
        b = Tensor(np.array([[0.25, 0.25, 0.5]]))
        assert float(batch_loss([a, b], [[0], [1]]).data) == pytest.approx(1.039721, abs=1e-6)

    def test_empty(self):
        with pytest.raises(ValidationError):
            batch_loss([], [])


class TestAverage:
    def test_one(self):
        row = np.array([0.2, 0.8])
        np.testing.assert_array_equal(average_distributions([row]), row)

    def test_two(self):
        np.testing.assert_allclose(average_distributions([[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.5])

    def test_three_random_rows(self):
        rng = np.random.default_rng(0)
        rows = [r / r.sum() for r in rng.random((3, 9))]
        assert abs(average_distributions(rows).sum() - 1.0) < 1e-9

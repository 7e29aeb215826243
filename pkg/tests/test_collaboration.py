import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextcast.collaboration import build_incidence, propagate
from contextcast.errors import ValidationError
from contextcast.numerics import ParamStore, grad_check

from conftest import random_events


class TestIncidence:
    def test_single_context(self):
        inc = build_incidence([(0, 0, 3, 0, 1), (0, 1, 2, 0, 0)], 4, 2, 2)
        assert inc.entity_contexts(3) == {1}
        assert inc.entity_contexts(0) == {0, 1}
        assert inc.relation_contexts(1) == {0}
        assert inc.relation_contexts(3) == {0}  # inverse of relation 1
        assert list(inc.unseen_entities) == [1]

    def test_two_contexts(self):
        inc = build_incidence([(1, 0, 2, 0, 0), (3, 0, 1, 5, 2)], 4, 1, 3)
        assert inc.entity_contexts(1) == {0, 2}

    def test_brute_force(self):
        rng = np.random.default_rng(0)
        ev = random_events(rng, 500, 30, 6, 4)
        inc = build_incidence(ev, 30, 6, 4)
        for v in range(30):
            expect = {int(e[4]) for e in ev if e[0] == v or e[2] == v}
            assert inc.entity_contexts(v) == expect
        for x in range(12):
            expect = {int(e[4]) for e in ev if e[1] == x % 6}
            assert inc.relation_contexts(x) == expect


def _two(a, b):
    return [np.array([a]), np.array([b])], np.array([[True, True]])


class TestPropagate:
    def test_single_membership_is_identity(self):
        rng = np.random.default_rng(1)
        tables = [rng.normal(size=(3, 2)) for _ in range(3)]
        member = np.array([[True, False, False], [False, True, False], [False, False, False]])
        for p in (1, 2, 5):
            out = propagate(tables, member, p)
            for a, b in zip(out, tables):
                np.testing.assert_array_equal(a, b)

    def test_one_layer(self):
        a, b = np.array([1.0, -2.0]), np.array([0.25, 3.0])
        tables, member = _two(a, b)
        out = propagate(tables, member, 1)
        np.testing.assert_allclose(out[0][0], a + b, atol=1e-12)
        np.testing.assert_allclose(out[1][0], b + a, atol=1e-12)

    def test_two_layers(self):
        a, b = np.array([1.0, -2.0]), np.array([0.25, 3.0])
        tables, member = _two(a, b)
        out = propagate(tables, member, 2)
        np.testing.assert_allclose(out[0][0], 2 * a + b, atol=1e-12)
        np.testing.assert_allclose(out[1][0], 2 * b + a, atol=1e-12)

    def test_three_contexts_mean_of_others(self):
        x = [np.array([[1.0]]), np.array([[2.0]]), np.array([[4.0]])]
        out = propagate(x, np.array([[True, True, True]]), 1)
        assert [o[0, 0] for o in out] == [1 + 3.0, 2 + 2.5, 4 + 1.5]

    def test_non_member_context_is_untouched(self):
        x = [np.array([[1.0]]), np.array([[2.0]]), np.array([[40.0]])]
        out = propagate(x, np.array([[True, True, False]]), 1)
        assert [o[0, 0] for o in out] == [3.0, 3.0, 40.0]

    def test_k1_is_bit_exact_identity(self):
        t = [np.random.default_rng(2).normal(size=(5, 3))]
        out = propagate(t, np.ones((5, 1), dtype=bool), 2)
        assert out[0].tobytes() == t[0].tobytes()

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 4), st.integers(0, 3))
    def test_linear_and_swap_symmetric(self, seed, k, p):
        rng = np.random.default_rng(seed)
        member = rng.random((6, k)) < 0.7
        x = [rng.normal(size=(6, 3)) for _ in range(k)]
        y = [rng.normal(size=(6, 3)) for _ in range(k)]
        alpha, beta = rng.normal(size=2)
        lhs = propagate([alpha * a + beta * b for a, b in zip(x, y)], member, p)
        px, py = propagate(x, member, p), propagate(y, member, p)
        for l, a, b in zip(lhs, px, py):
            np.testing.assert_allclose(l, alpha * a + beta * b, atol=1e-10)
        perm = rng.permutation(k)
        swapped = propagate([x[i] for i in perm], member[:, perm], p)
        for c, i in enumerate(perm):
            np.testing.assert_allclose(swapped[c], px[i], atol=1e-12)

    def test_gradients(self):
        rng = np.random.default_rng(3)
        store = ParamStore()
        ts = [store.add(f"t{c}", rng.normal(size=(4, 2))) for c in range(3)]
        member = rng.random((4, 3)) < 0.7
        w = rng.normal(size=(4, 2))

        def fn():
            out = propagate(ts, member, 2)
            return sum(((o * o) * w).sum() for o in out[1:]) + (out[0] * w).sum()

        assert grad_check(fn, store).passed(1e-6)

    def test_shape_errors(self):
        with pytest.raises(ValidationError):
            propagate([np.zeros((2, 2))], np.ones((2, 2), dtype=bool), 1)
        with pytest.raises(ValidationError):
            propagate([np.zeros((2, 2))], np.ones((2, 1), dtype=bool), -1)

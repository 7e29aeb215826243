import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextcast.numerics import ParamStore, grad_check
from contextcast.tensor import (
    Tensor, concat, conv1d_same, leaky, log_clamped, matmul, sigmoid, softmax, stack, take_rows, tanh,
)


def _store(rng, **shapes):
    store = ParamStore()
    for name, shape in shapes.items():
        store.add(name, rng.normal(size=shape))
    return store


def _squared(t):
    return t * t


CASES = {
    "matmul": (dict(a=(3, 4), b=(4, 2)), lambda p: matmul(p["a"], p["b"]).sum()),
    "broadcast_add": (dict(a=(3, 4), b=(4,)), lambda p: ((p["a"] + p["b"]) * p["a"]).sum()),
    "sub_neg": (dict(a=(2, 3), b=(2, 3)), lambda p: (-(p["a"] - p["b"]) * p["b"]).mean()),
    "sigmoid_tanh": (dict(a=(3, 3)), lambda p: (sigmoid(p["a"]) * tanh(p["a"])).sum()),
    "leaky": (dict(a=(4, 4)), lambda p: (leaky(p["a"], 0.2) * p["a"]).sum()),
    "take_rows": (dict(a=(5, 3)), lambda p: (take_rows(p["a"], [0, 2, 2, 4]) * take_rows(p["a"], [1, 1, 3, 0])).sum()),
    "concat_stack": (dict(a=(2, 3), b=(2, 3)),
                     lambda p: (concat([p["a"], p["b"]], 1).sum() + (stack([p["a"], p["b"]], 1) * 2.0).sum())),
    "transpose_reshape": (dict(a=(2, 6)), lambda p: matmul(p["a"].reshape(3, 4).T, p["a"].reshape(3, 4)).sum()),
    "softmax_log": (dict(a=(3, 5)), lambda p: log_clamped(softmax(p["a"]), 1e-12).sum()),
    "conv": (dict(x=(2, 2, 5), w=(3, 2, 3), b=(3,)), lambda p: _squared(conv1d_same(p["x"], p["w"], p["b"])).sum()),
    "getitem": (dict(a=(4, 3)), lambda p: (p["a"][1:3] * p["a"][0:2]).sum()),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_op_gradients_match_finite_differences(name):
    shapes, fn = CASES[name]
    store = _store(np.random.default_rng(1), **shapes)
    report = grad_check(lambda: fn(store), store)
    assert report.passed(1e-6), (name, report)


def test_conv_matches_direct_loops():
    rng = np.random.default_rng(0)
    x, w, b = rng.normal(size=(2, 2, 6)), rng.normal(size=(4, 2, 3)), rng.normal(size=4)
    out = conv1d_same(Tensor(x), Tensor(w), Tensor(b)).data
    pad = np.pad(x, ((0, 0), (0, 0), (1, 1)))
    ref = np.zeros((2, 4, 6))
    for n in range(2):
        for f in range(4):
            for j in range(6):
                ref[n, f, j] = b[f] + np.sum(w[f] * pad[n, :, j:j + 3])
    np.testing.assert_allclose(out, ref, rtol=0, atol=1e-12)


def test_backward_accumulates_shared_leaf():
    a = Tensor(np.array([2.0]), requires_grad=True)
    (a * a + a).sum().backward()
    assert a.grad[0] == pytest.approx(5.0)


def test_no_grad_inputs_build_no_graph():
    out = Tensor(np.ones(3)) + Tensor(np.ones(3))
    assert not out.requires_grad


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_rows_sum_to_one(values):
    p = softmax(Tensor(np.array([values]))).data
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.all(p >= 0)


def test_sigmoid_is_stable_at_extremes():
    out = sigmoid(Tensor(np.array([-1000.0, 0.0, 1000.0]))).data
    np.testing.assert_allclose(out, [0.0, 0.5, 1.0])
    assert np.all(np.isfinite(out))

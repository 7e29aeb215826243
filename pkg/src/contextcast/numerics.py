"""Initialization, activations, loss, Adam, and the finite-difference gradient check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import NumericError, ValidationError
from .tensor import Tensor, leaky, log_clamped, softmax, take_rows

RRELU_LOWER = 1.0 / 8.0
RRELU_UPPER = 1.0 / 3.0
PROB_FLOOR = 1e-12


def xavier_init(rows: int, cols: int, seed) -> np.ndarray:
    """Glorot-uniform matrix in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].

    ``seed`` may be an int or a ``numpy.random.Generator`` (consumed in place).
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"xavier_init needs positive dims, got {rows}x{cols}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def _check_slopes(lower: float, upper: float) -> None:
    if not (0.0 < lower <= upper < 1.0):
        raise ValidationError(f"rrelu needs 0 < lower <= upper < 1, got ({lower}, {upper})")


def rrelu(x, lower: float = RRELU_LOWER, upper: float = RRELU_UPPER, mode: str = "eval", seed=None):
    """Randomized leaky ReLU.

    In ``"train"`` mode each negative entry gets its own slope drawn from
    U[lower, upper]; in ``"eval"`` mode the slope is the midpoint. Works on
    plain arrays and on :class:`Tensor` (the result is then differentiable).
    """
    _check_slopes(lower, upper)
    shape = x.shape
    if mode == "train":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        slope = rng.uniform(lower, upper, size=shape)
    elif mode == "eval":
        slope = 0.5 * (lower + upper)
    else:
        raise ValidationError(f"unknown rrelu mode {mode!r}")
    if isinstance(x, Tensor):
        return leaky(x, slope)
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, x * slope)


def softmax_rows(logits):
    if isinstance(logits, Tensor):
        if not np.all(np.isfinite(logits.data)):
            raise NumericError("softmax_rows received non-finite logits")
        return softmax(logits, axis=-1)
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NumericError("softmax_rows received non-finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probabilities, targets):
    """Mean of ``-ln p[row, target]`` with p floored at 1e-12."""
    targets = np.asarray(targets, dtype=np.int64)
    width = probabilities.shape[-1]
    if targets.ndim != 1 or len(targets) != probabilities.shape[0]:
        raise ValidationError("one target id per probability row is required")
    if np.any(targets < 0) or np.any(targets >= width):
        raise ValidationError(f"target id out of range [0, {width})")
    rows = np.arange(len(targets))
    if isinstance(probabilities, Tensor):
        picked = take_rows(probabilities.reshape(-1), rows * width + targets)
        return -log_clamped(picked, PROB_FLOOR).mean()
    p = np.asarray(probabilities, dtype=np.float64)[rows, targets]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


@dataclass
class ParamStore:
    """Named trainable tensors plus Adam moment estimates."""

    params: dict[str, Tensor] = field(default_factory=dict)
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise ValidationError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __iter__(self):
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def count(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def load(self, values: dict[str, np.ndarray]) -> None:
        for k, t in self.params.items():
            if values[k].shape != t.data.shape:
                raise ValidationError(f"shape mismatch for {k}: {values[k].shape} vs {t.data.shape}")
            t.data = np.array(values[k], dtype=np.float64)


def adam_step(store: ParamStore, hyper: AdamConfig) -> ParamStore:
    """One bias-corrected Adam update, with decoupled weight decay scaled by lr.

    Parameters without a gradient are treated as having a zero gradient.
    Gradients are cleared afterwards.
    """
    store.step += 1
    t = store.step
    c1 = 1.0 - hyper.beta1**t
    c2 = 1.0 - hyper.beta2**t
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store.m[name]
        v = store.v[name]
        m *= hyper.beta1
        m += (1.0 - hyper.beta1) * g
        v *= hyper.beta2
        g *= g
        g *= 1.0 - hyper.beta2
        v += g
        denom = v / c2
        np.sqrt(denom, out=denom)
        denom += hyper.eps
        if hyper.weight_decay:
            p.data *= 1.0 - hyper.lr * hyper.weight_decay
        denom = np.divide(m, denom, out=denom)
        denom *= hyper.lr / c1
        p.data -= denom
        p.grad = None
    return store


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst: tuple[str, tuple] | None
    n_coords: int

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def grad_check(
    fn: Callable[[], Tensor],
    store: ParamStore,
    eps: float = 1e-5,
    names: Iterable[str] | None = None,
    max_coords: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare tape gradients of a scalar ``fn`` to central differences.

    ``fn`` takes no arguments and reads the current values in ``store``.
    Relative error per coordinate uses ``max(|analytic|, |numeric|, 1e-8)``
    as the denominator. With ``max_coords`` only a seeded random subset of
    coordinates per parameter is probed.
    """
    if not (1e-6 <= eps <= 1e-4):
        raise ValidationError(f"eps must lie in [1e-6, 1e-4], got {eps}")
    names = list(names) if names is not None else store.names()
    store.zero_grad()
    out = fn()
    if out.data.size != 1:
        raise ValidationError(f"grad_check needs a scalar function, got shape {out.shape}")
    if not np.all(np.isfinite(out.data)):
        raise NumericError("grad_check: function value is not finite")
    out.backward()
    analytic = {
        n: (store[n].grad.copy() if store[n].grad is not None else np.zeros_like(store[n].data))
        for n in names
    }
    store.zero_grad()
    rng = np.random.default_rng(seed)
    worst_err, worst_at, count = 0.0, None, 0
    for n in names:
        data = store[n].data
        flat_ids = np.arange(data.size)
        if max_coords is not None and data.size > max_coords:
            flat_ids = np.sort(rng.choice(data.size, size=max_coords, replace=False))
        for flat in flat_ids:
            idx = np.unravel_index(flat, data.shape)
            orig = data[idx]
            data[idx] = orig + eps
            fp = fn().data.item()
            data[idx] = orig - eps
            fm = fn().data.item()
            data[idx] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NumericError(f"grad_check: non-finite value probing {n}{idx}")
            numeric = (fp - fm) / (2.0 * eps)
            a = analytic[n][idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            count += 1
            if err > worst_err:
                worst_err, worst_at = err, (n, tuple(int(i) for i in idx))
    return GradCheckReport(worst_err, worst_at, count)

"""Shared builders for small random instances, plus the acceptance summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from contextcast.collaboration import build_incidence
from contextcast.config import TrainConfig
from contextcast.events import add_inverse_events, sort_events
from contextcast.model import ContextForecaster

ACCEPTANCE_LINES: list[str] = []


def random_events(rng, n, n_ent, n_rel, n_ctx, t=0):
    return np.column_stack([
        rng.integers(n_ent, size=n),
        rng.integers(n_rel, size=n),
        rng.integers(n_ent, size=n),
        np.full(n, t),
        rng.integers(n_ctx, size=n),
    ]).astype(np.int64)


def toy_model(seed=0, n_ent=5, n_rel=2, n_ctx=2, dim=4, layers=1, hg_layers=1, history=2,
              n_steps=3, events_per_step=6, **overrides):
    """A model plus an inverse-augmented timeline of ``n_steps + 1`` random snapshots."""
    rng = np.random.default_rng(seed)
    raw = [random_events(rng, events_per_step, n_ent, n_rel, n_ctx, t) for t in range(n_steps + 1)]
    timeline = [sort_events(add_inverse_events(s, n_rel)) for s in raw]
    cfg = TrainConfig(dim=dim, layers=layers, hg_layers=hg_layers, history=history,
                      channels=3, kernel=3, seed=seed, **overrides)
    inc = build_incidence(np.concatenate(raw), n_ent, n_rel, n_ctx)
    model = ContextForecaster(n_ent, 2 * n_rel, n_ctx, cfg, inc)
    return model, timeline


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

"""Timeline training loop with per-timestamp Adam steps and validation-MRR model selection."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .checkpoint import ModelCheckpoint
from .collaboration import build_incidence
from .config import TrainConfig
from .errors import NumericError, ValidationError
from .evaluator import MetricsReport, evaluate
from .events import DatasetSplits, Vocab, augmented_timeline, history_window
from .model import ContextForecaster, to_checkpoint
from .numerics import AdamConfig, adam_step

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    valid: MetricsReport | None
    seconds: float

    def line(self, with_time: bool = True) -> str:
        v = self.valid
        metrics = [v.mrr, v.hit1, v.hit3, v.hit10] if v is not None else [float("nan")] * 4
        cols = [str(self.epoch), repr(self.loss)] + [repr(m) for m in metrics]
        if with_time:
            cols.append(f"{self.seconds:.3f}")
        return "\t".join(cols)


LOG_HEADER = "epoch\tloss\tmrr\thit1\thit3\thit10\tseconds"


def build_model(vocab: Vocab, splits: DatasetSplits, config: TrainConfig) -> ContextForecaster:
    k = vocab.n_contexts
    if config.contexts and config.contexts != k:
        raise ValidationError(f"config asks for K={config.contexts} but the dataset has K={k}")
    incidence = build_incidence(splits.train.events(), vocab.n_entities, vocab.n_relations, k)
    return ContextForecaster(vocab.n_entities, 2 * vocab.n_relations, k, config, incidence)


def train_step(model: ContextForecaster, timeline, t: int, act, adam: AdamConfig,
               n_raw_relations: int) -> float:
    """Encode the window ending at ``t``, score every event at ``t + 1``, take one Adam step.

    Returns the loss before the step. ``timeline`` carries inverse events;
    with ``train_inverse`` off only the original-direction events are targets.
    """
    targets = timeline[t + 1]
    if not model.config.train_inverse:
        targets = targets[targets[:, 1] < n_raw_relations]
    if len(targets) == 0:
        raise ValidationError(f"empty target snapshot at t={t + 1}")
    history = history_window(timeline, t, model.config.history)
    model.store.zero_grad()
    loss = model.loss(history, targets, act)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss at target timestamp {t + 1}")
    loss.backward()
    adam_step(model.store, adam)
    return value


def fit(vocab: Vocab, splits: DatasetSplits, config: TrainConfig, *,
        log: TextIO | None = None,
        on_epoch: Callable[[EpochRecord], None] | None = None,
        log_time: bool = True) -> ModelCheckpoint:
    """Train over the training timeline, keeping the parameters with the best validation MRR.

    Stops after ``patience`` consecutive epochs without strict improvement
    (``patience = 0`` disables early stopping) or at ``max_epochs``. One line
    per epoch is written to ``log`` when given.
    """
    model = build_model(vocab, splits, config)
    fingerprint = vocab.fingerprint()
    logger.info("parameter count: %d", model.parameter_count())
    timeline = augmented_timeline(splits, vocab.n_relations)
    adam = AdamConfig(lr=config.lr, weight_decay=config.weight_decay)
    act = model.activation("train", np.random.default_rng([config.seed, 1]))
    steps = [t for t in splits.train.times[:-1] if len(splits.train.at(t + 1))]
    if not steps:
        raise ValidationError("training split needs at least two timestamps with events")
    has_valid = any(len(s) for s in splits.valid.snapshots)

    best: ModelCheckpoint | None = None
    best_mrr = -np.inf
    stale = 0
    if log is not None:
        print(LOG_HEADER if log_time else LOG_HEADER.rsplit("\t", 1)[0], file=log, flush=True)
    for epoch in range(1, config.max_epochs + 1):
        start = time.perf_counter()
        losses = []
        for t in steps:
            try:
                losses.append(train_step(model, timeline, t, act, adam, vocab.n_relations))
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from None
        report = None
        if has_valid:
            report = evaluate(model, timeline, splits.valid, vocab.n_relations, splits.masked_entities,
                              filtered=config.filtered, both_directions=config.eval_inverse)
        record = EpochRecord(epoch, float(np.mean(losses)), report, time.perf_counter() - start)
        if log is not None:
            print(record.line(log_time), file=log, flush=True)
        if on_epoch is not None:
            on_epoch(record)
        # without a validation split the latest epoch wins
        score = report.mrr if report is not None else float(epoch)
        if best is None or score > best_mrr:
            best_mrr = score
            best = to_checkpoint(model, fingerprint, epoch, report.mrr if report is not None else 0.0)
            stale = 0
        else:
            stale += 1
            if config.patience and stale >= config.patience:
                break
    return best


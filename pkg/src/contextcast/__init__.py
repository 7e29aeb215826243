"""contextcast: context-aware forecasting of temporal knowledge-graph events.

Events are (subject, relation, object, time, context) quintuples. Each
snapshot is split by context, every context gets its own recurrent graph
encoder and convolutional scoring head, and a parameter-free hypergraph
step shares embeddings of the same id across contexts.

Typical use::

    from contextcast import TrainConfig, load_dataset, fit, evaluate_split
    vocab, splits = load_dataset("data/planted")
    ckpt = fit(vocab, splits, TrainConfig(dim=64))
    print(evaluate_split(ckpt, vocab, splits, "test").table())
"""

from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .collaboration import HyperIncidence, build_incidence, propagate
from .config import TrainConfig
from .context_gen import assign_contexts, kmeans, tokenize, top_terms, vectorize
from .errors import (
    CompatibilityError, ContextcastError, FormatError, NumericError, ParseError, ValidationError,
)
from .evaluator import (
    VARIANTS, MetricsReport, compute_metrics, evaluate, evaluate_split, rank_of_truth, run_ablation,
)
from .events import (
    DatasetSplits, Quintuple, SnapshotSequence, Vocab, add_inverse_events, history_window,
    load_dataset, partition_by_context, save_dataset, split_by_time,
)
from .model import ContextForecaster, from_checkpoint, to_checkpoint
from .numerics import AdamConfig, ParamStore, adam_step, cross_entropy, grad_check, rrelu, xavier_init
from .synthetic import PlantedSpec, context_blind_bound, generate
from .trainer import fit

__version__ = "0.1.0"

__all__ = [
    "AdamConfig", "CompatibilityError", "ContextForecaster", "ContextcastError", "DatasetSplits",
    "FormatError", "HyperIncidence", "MetricsReport", "ModelCheckpoint", "NumericError",
    "ParamStore", "ParseError", "PlantedSpec", "Quintuple", "SnapshotSequence", "TrainConfig",
    "VARIANTS", "ValidationError", "Vocab", "adam_step", "add_inverse_events", "assign_contexts",
    "build_incidence", "compute_metrics", "context_blind_bound", "cross_entropy", "evaluate",
    "evaluate_split", "fit", "from_checkpoint", "generate", "grad_check", "history_window",
    "kmeans", "load_checkpoint", "load_dataset", "partition_by_context", "propagate",
    "rank_of_truth", "rrelu", "run_ablation", "save_checkpoint", "save_dataset", "split_by_time",
    "to_checkpoint", "tokenize", "top_terms", "vectorize", "xavier_init",
]

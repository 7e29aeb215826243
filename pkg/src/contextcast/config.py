"""Training configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 200
    layers: int = 2  # relational message-passing layers
    hg_layers: int = 1  # hyperedge propagation layers
    history: int = 3  # window length
    contexts: int = 0  # 0 = take K from the dataset
    lr: float = 1e-3
    weight_decay: float = 1e-6
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    rrelu_lower: float = 1.0 / 8.0
    rrelu_upper: float = 1.0 / 3.0
    channels: int = 50
    kernel: int = 3
    ent_hg: bool = True
    rel_hg: bool = True
    train_inverse: bool = True
    eval_inverse: bool = True
    filtered: bool = False

    def __post_init__(self):
        for name in ("dim", "layers", "history", "channels", "kernel", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.hg_layers < 0 or self.contexts < 0 or self.patience < 0:
            raise ValidationError("hg_layers, contexts and patience must be >= 0")
        if self.kernel % 2 != 1:
            raise ValidationError("kernel width must be odd")
        if not (0.0 < self.rrelu_lower <= self.rrelu_upper < 1.0):
            raise ValidationError("rrelu bounds must satisfy 0 < lower <= upper < 1")
        if self.lr < 0 or self.weight_decay < 0:
            raise ValidationError("lr and weight_decay must be non-negative")

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "TrainConfig":
        return cls(**parse_config_text(text, source, cls))

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), str(path))


_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(raw: str, kind):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return kind(raw)


def parse_config_text(text: str, source: str, schema) -> dict:
    """Parse ``key = value`` lines against a dataclass schema; unknown keys are errors."""
    types = {f.name: _TYPES.get(f.type, f.type) for f in fields(schema)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(source, lineno, "expected 'key = value'")
        key, _, value = (p.strip() for p in stripped.partition("="))
        if key not in types:
            raise ParseError(source, lineno, f"unknown key {key!r}")
        try:
            out[key] = _coerce(value, types[key])
        except ValueError as exc:
            raise ParseError(source, lineno, f"bad value for {key}: {exc}") from None
    return out

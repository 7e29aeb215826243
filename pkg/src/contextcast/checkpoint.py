"""Binary checkpoint container.

Layout (little-endian)::

    b"SECO" | u32 version
    u32 len | config text (UTF-8, ``key = value`` lines)
    u64 |E| | u64 |R| | u64 K | u32 len | vocab hash (ASCII hex)
    u64 epoch | f64 best validation MRR | u64 optimizer step
    u32 n_tensors
    n_tensors x (u32 len | name | u32 ndim | ndim x u64 dims)
    tensors, in directory order, as raw float64 values
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .errors import CompatibilityError, FormatError

MAGIC = b"SECO"
VERSION = 1


@dataclass
class ModelCheckpoint:
    config: TrainConfig
    fingerprint: tuple[int, int, int, str]
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    adam_step: int = 0
    incidence_entities: np.ndarray | None = None
    incidence_relations: np.ndarray | None = None
    epoch: int = 0
    best_mrr: float = 0.0

    @property
    def n_contexts(self) -> int:
        return self.fingerprint[2]

    def check_compatible(self, fingerprint) -> None:
        fingerprint = tuple(fingerprint)
        if fingerprint[:3] != self.fingerprint[:3]:
            raise CompatibilityError(
                f"checkpoint built for (|E|, |R|, K) = {self.fingerprint[:3]}, dataset has {fingerprint[:3]}"
            )
        if fingerprint[3] != self.fingerprint[3]:
            raise CompatibilityError("checkpoint vocabulary hash does not match the dataset")


def _tensors(ckpt: ModelCheckpoint) -> list[tuple[str, np.ndarray]]:
    out = [(f"p/{k}", v) for k, v in ckpt.params.items()]
    out += [(f"m/{k}", v) for k, v in ckpt.adam_m.items()]
    out += [(f"v/{k}", v) for k, v in ckpt.adam_v.items()]
    if ckpt.incidence_entities is not None:
        out.append(("inc/entities", ckpt.incidence_entities.astype(np.float64)))
    if ckpt.incidence_relations is not None:
        out.append(("inc/relations", ckpt.incidence_relations.astype(np.float64)))
    return out


def _blob(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def save_checkpoint(ckpt: ModelCheckpoint, path) -> None:
    n_e, n_r, k, digest = ckpt.fingerprint
    parts = [MAGIC, struct.pack("<I", VERSION), _blob(ckpt.config.to_text())]
    parts.append(struct.pack("<QQQ", n_e, n_r, k) + _blob(digest))
    parts.append(struct.pack("<QdQ", ckpt.epoch, ckpt.best_mrr, ckpt.adam_step))
    tensors = _tensors(ckpt)
    parts.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        parts.append(_blob(name) + struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
    for _, arr in tensors:
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("checkpoint is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("checkpoint string is not valid UTF-8") from None


def load_checkpoint(path) -> ModelCheckpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from None
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("not a checkpoint (bad magic)")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    try:
        config = TrainConfig.from_text(r.text(), "<checkpoint config>")
    except ValueError as exc:
        raise FormatError(f"bad config block: {exc}") from None
    n_e, n_r, k = r.unpack("<QQQ")
    digest = r.text()
    epoch, best_mrr, step = r.unpack("<QdQ")
    (count,) = r.unpack("<I")
    directory = []
    for _ in range(count):
        name = r.text()
        (ndim,) = r.unpack("<I")
        dims = r.unpack(f"<{ndim}Q") if ndim else ()
        directory.append((name, tuple(int(x) for x in dims)))
    tensors = {}
    for name, dims in directory:
        size = int(np.prod(dims)) if dims else 1
        raw = r.take(8 * size)
        tensors[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(dims)
    if r.pos != len(data):
        raise FormatError("trailing bytes after checkpoint tensors")

    def group(prefix):
        return {n[len(prefix):]: v for n, v in tensors.items() if n.startswith(prefix)}

    inc_e = tensors.get("inc/entities")
    inc_r = tensors.get("inc/relations")
    return ModelCheckpoint(
        config=config,
        fingerprint=(int(n_e), int(n_r), int(k), digest),
        params=group("p/"),
        adam_m=group("m/"),
        adam_v=group("v/"),
        adam_step=int(step),
        incidence_entities=None if inc_e is None else inc_e.astype(bool),
        incidence_relations=None if inc_r is None else inc_r.astype(bool),
        epoch=int(epoch),
        best_mrr=float(best_mrr),
    )

"""Types shared by every detector."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericError

KINDS = ("HBOS", "PCA", "MCD", "KNN", "LOF", "CBLOF", "AE", "IFOREST")


@dataclass(frozen=True)
class ScoreVector:
    """Per-record outlier scores from one detector run; higher is more anomalous."""

    detector: str
    ids: tuple
    scores: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64, copy=True).reshape(-1)
        if scores.shape[0] != len(self.ids):
            raise ValueError(f"{self.detector}: {scores.shape[0]} scores for {len(self.ids)} ids")
        if not np.all(np.isfinite(scores)):
            raise NumericError(f"{self.detector}: non-finite outlier scores")
        if np.any(scores < 0):
            raise NumericError(f"{self.detector}: negative outlier scores")
        if self.normalized and np.any(scores > 1):
            raise ValueError(f"{self.detector}: normalized scores exceed 1")
        scores.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return len(self.ids)


def derive_seed(master: int, *parts) -> int:
    """Stable 64-bit seed for a named sub-stream of ``master``.

    Independent of Python's hash randomisation, so adding a detector never
    perturbs the stream of another.
    """
    payload = json.dumps([int(master)] + [_jsonable(p) for p in parts], separators=(",", ":"))
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *parts))


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass(frozen=True)
class DetectorConfig:
    """Detector kind, hyperparameters and seed.

    ``name`` labels the run in outputs and defaults to ``kind``; two runs of the
    same kind with different parameters need distinct names.
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    name: str | None = None

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in KINDS:
            raise ConfigError(f"unknown detector kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "params", dict(self.params))
        if self.name is None:
            object.__setattr__(self, "name", kind)

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "params": _jsonable_params(self.params), "seed": self.seed}


def _jsonable_params(params):
    return {k: _jsonable(v) for k, v in sorted(params.items())}

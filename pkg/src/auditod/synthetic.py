"""Seeded planted-anomaly datasets for checking detectors end to end."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ALL_LETTERS, FeatureFrame, RawTable, minmax_scale
from .errors import ConfigError
from .evaluation import LabelSet


@dataclass(frozen=True)
class SyntheticSpec:
    """``shift`` is in units of each column's inlier range."""

    n_inliers: int = 2000
    n_anomalies: int = 20
    p: int = 10
    shift: float = 6.0
    seed: int = 42

    def __post_init__(self):
        if self.n_anomalies < 1 or self.n_inliers < 2:
            raise ConfigError("need at least one anomaly and two inliers")
        if self.n_anomalies >= self.n_inliers:
            raise ConfigError("n_anomalies must be smaller than n_inliers")
        if self.p < 1:
            raise ConfigError("p must be >= 1")
        if not self.shift > 0:
            raise ConfigError("shift must be positive")


@dataclass(frozen=True)
class SyntheticData:
    """Unscaled draws plus everything needed to audit them."""

    ids: tuple
    columns: tuple
    values: np.ndarray
    is_anomaly: np.ndarray
    mean: np.ndarray
    cov: np.ndarray

    @property
    def labels(self):
        return LabelSet(frozenset(i for i, a in zip(self.ids, self.is_anomaly) if a))

    def table(self):
        return RawTable(self.ids, self.columns, self.values)


def random_spd(p, rng):
    """Random covariance with strong cross-correlation and mixed column scales."""
    A = rng.normal(size=(p, p))
    corr = A @ A.T / p + 0.05 * np.eye(p)
    scale = 10.0 ** rng.uniform(3.0, 6.0, size=p)
    return corr * np.outer(scale, scale)


def synthesize(spec: SyntheticSpec) -> SyntheticData:
    rng = np.random.default_rng(spec.seed)
    p = spec.p
    cov = random_spd(p, rng)
    mean = rng.uniform(-1.0, 1.0, size=p) * np.sqrt(np.diag(cov))
    inliers = rng.multivariate_normal(mean, cov, size=spec.n_inliers, method="cholesky")
    span = inliers.max(axis=0) - inliers.min(axis=0)
    base = rng.multivariate_normal(mean, cov, size=spec.n_anomalies, method="cholesky")
    # every anomaly gets its own direction
    u = rng.normal(size=(spec.n_anomalies, p))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    anomalies = base + spec.shift * span * u
    values = np.vstack([inliers, anomalies])
    flag = np.r_[np.zeros(spec.n_inliers, bool), np.ones(spec.n_anomalies, bool)]
    perm = rng.permutation(len(values))
    values, flag = values[perm], flag[perm]
    width = len(str(len(values)))
    ids = tuple(f"SYN-{i:0{width}d}" for i in range(1, len(values) + 1))
    if p <= len(ALL_LETTERS):
        columns = ALL_LETTERS[:p]
    else:
        columns = tuple(f"x{j + 1}" for j in range(p))
    return SyntheticData(ids, columns, values, flag, mean, cov)


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> tuple[FeatureFrame, LabelSet]:
    """Min-max scaled frame of inliers plus displaced anomalies, and the anomaly ids."""
    data = synthesize(spec)
    return minmax_scale(data.table()), data.labels

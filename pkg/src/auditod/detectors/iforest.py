"""Isolation forest."""
import math

import numpy as np

from .. import kernels
from ..errors import ConfigError
from .base import ScoreVector

EULER_GAMMA = 0.5772156649015329


def average_path_length(m):
    """Mean depth of an unsuccessful search in a random binary tree of ``m`` points."""
    if m <= 1:
        return 0.0
    if m == 2:
        return 1.0
    return 2.0 * (math.log(m - 1) + EULER_GAMMA) - 2.0 * (m - 1) / m


def anomaly_score(mean_depth, subsample):
    return 2.0 ** (-np.asarray(mean_depth, dtype=np.float64) / average_path_length(subsample))


class _Forest:
    """Flat array storage for a list of trees (see :func:`auditod.kernels.forest_depths`)."""

    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.leaf_extra = [], [], [], [], []
        self.roots = []

    def _new(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_extra.append(0.0)
        return len(self.feature) - 1

    def grow(self, X, height_limit, rng):
        root = self._new()
        self.roots.append(root)
        stack = [(root, X, 0)]
        while stack:
            node, pts, depth = stack.pop()
            m = pts.shape[0]
            if depth < height_limit and m > 1:
                lo, hi = pts.min(axis=0), pts.max(axis=0)
                splittable = np.flatnonzero(hi > lo)
            else:
                splittable = ()
            if len(splittable) == 0:
                self.leaf_extra[node] = depth + average_path_length(m)
                continue
            f = int(splittable[rng.integers(len(splittable))])
            t = float(rng.uniform(lo[f], hi[f]))
            goes_left = pts[:, f] < t
            l, r = self._new(), self._new()
            self.feature[node], self.threshold[node] = f, t
            self.left[node], self.right[node] = l, r
            stack.append((r, pts[~goes_left], depth + 1))
            stack.append((l, pts[goes_left], depth + 1))

    def arrays(self):
        return (
            np.asarray(self.roots, dtype=np.int64),
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.leaf_extra, dtype=np.float64),
        )


def build_forest(X, n_estimators, subsample, rng):
    n = X.shape[0]
    psi = min(int(subsample), n)
    limit = math.ceil(math.log2(psi))
    forest = _Forest()
    for _ in range(int(n_estimators)):
        rows = rng.choice(n, size=psi, replace=False)
        forest.grow(X[rows], limit, rng)
    return forest, psi


def iforest_scores(X, n_estimators=100, subsample=256, rng=None):
    """``2 ** (-mean path length / c(subsample))`` for every row."""
    if int(n_estimators) < 1:
        raise ConfigError(f"n_estimators must be >= 1, got {n_estimators}")
    if int(subsample) < 2:
        raise ConfigError(f"subsample must be >= 2, got {subsample}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    rng = rng if rng is not None else np.random.default_rng(0)
    forest, psi = build_forest(X, n_estimators, subsample, rng)
    depths = kernels.forest_depths(X, *forest.arrays())
    return anomaly_score(depths, psi)


def score_iforest(frame, n_estimators=100, subsample=256, seed=0, name="IFOREST"):
    rng = np.random.default_rng(seed)
    return ScoreVector(name, frame.ids, iforest_scores(frame.values, n_estimators, subsample, rng))

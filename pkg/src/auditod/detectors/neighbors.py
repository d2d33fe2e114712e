"""Distance-based detectors built on an exact neighbour search."""
import numpy as np

from .. import kernels
from ..errors import ConfigError
from .base import ScoreVector

# keeps lrd finite when a point sits inside a clump of > k duplicates; such a
# clump then gets LOF exactly 1
LRD_EPS = 1e-10


class NeighborIndex:
    """Exact Euclidean k-nearest-neighbour lookup over a fixed point set.

    Results equal an exhaustive O(n^2) scan: each row's own index is never
    returned, and equal distances are broken towards the lower row index.
    """

    def __init__(self, points):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self._cache = {}

    @property
    def n(self):
        return self.points.shape[0]

    def query(self, k):
        k = int(k)
        if not 1 <= k < self.n:
            raise ConfigError(f"n_neighbors must satisfy 1 <= k < n = {self.n}, got {k}")
        # a query for k is a prefix of a query for any larger k
        for kk in sorted(self._cache):
            if kk >= k:
                dist, idx = self._cache[kk]
                return dist[:, :k], idx[:, :k]
        self._cache[k] = kernels.knn_query(self.points, k)
        return self._cache[k]


def knn_scores(index, n_neighbors, mode="mean"):
    dist, _ = index.query(n_neighbors)
    if mode == "mean":
        return dist.mean(axis=1)
    if mode == "kth":
        return dist[:, -1].copy()
    raise ConfigError(f"KNN mode must be 'mean' or 'kth', got {mode!r}")


def lof_scores(index, n_neighbors):
    """Local outlier factor with exactly ``n_neighbors`` neighbours per point."""
    dist, idx = index.query(n_neighbors)
    k_distance = dist[:, -1]
    reach = np.maximum(k_distance[idx], dist)
    lrd = 1.0 / (reach.mean(axis=1) + LRD_EPS)
    return lrd[idx].mean(axis=1) / lrd


def score_knn(frame, n_neighbors=5, mode="mean", name="KNN", index=None):
    index = index or NeighborIndex(frame.values)
    return ScoreVector(name, frame.ids, knn_scores(index, n_neighbors, mode))


def score_lof(frame, n_neighbors=20, name="LOF", index=None):
    index = index or NeighborIndex(frame.values)
    return ScoreVector(name, frame.ids, lof_scores(index, n_neighbors))

"""Cluster-based local outlier factor on top of a seeded k-means."""
import numpy as np

from .. import kernels
from ..errors import ConfigError
from .base import ScoreVector


def kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    _, d2 = kernels.nearest_centroid(X, centers[:1])
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            pick = int(rng.integers(n))
        centers[c] = X[pick]
        _, d2 = kernels.nearest_centroid(X, centers[: c + 1])
    return centers


def kmeans(X, k, rng, max_iter=300, tol=1e-6):
    """Lloyd iterations from a k-means++ start.

    An empty cluster is re-seeded at the point farthest from its current
    centroid. Hitting ``max_iter`` is not an error.

    Returns
    -------
    labels : ndarray of int
    centers : ndarray, shape (k, p)
    n_iter : int
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"n_clusters must satisfy 1 <= k <= n = {n}, got {k}")
    centers = kmeans_pp_init(X, k, rng)
    labels, d2 = kernels.nearest_centroid(X, centers)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = np.empty_like(centers)
        counts = np.bincount(labels, minlength=k)
        taken = set()
        for c in range(k):
            if counts[c]:
                new[c] = X[labels == c].mean(axis=0)
                continue
            order = np.argsort(-d2, kind="stable")
            far = next(int(i) for i in order if int(i) not in taken)
            taken.add(far)
            new[c] = X[far]
        shift = float(((new - centers) ** 2).sum())
        centers = new
        labels, d2 = kernels.nearest_centroid(X, centers)
        if shift <= tol:
            break
    return labels, centers, n_iter


def large_cluster_mask(sizes, alpha=0.9, beta=5.0):
    """Mark the clusters that count as "large".

    Clusters are sorted by size (descending); the boundary is the first
    position where the cumulative size reaches ``alpha * n`` or the size
    ratio to the next cluster is at least ``beta``.
    """
    sizes = np.asarray(sizes)
    order = np.argsort(-sizes, kind="stable")
    s = sizes[order].astype(np.float64)
    n = s.sum()
    cum = np.cumsum(s)
    b = len(s)
    for i in range(len(s)):
        if cum[i] >= alpha * n:
            b = i + 1
            break
        if i + 1 < len(s) and s[i + 1] > 0 and s[i] / s[i + 1] >= beta:
            b = i + 1
            break
        if i + 1 < len(s) and s[i + 1] == 0:
            b = i + 1
            break
    mask = np.zeros(len(s), dtype=bool)
    mask[order[:b]] = True
    return mask


def cblof_scores(X, n_clusters=8, rng=None, alpha=0.9, beta=5.0):
    if not 0.5 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0.5, 1], got {alpha}")
    if not beta > 1.0:
        raise ConfigError(f"beta must exceed 1, got {beta}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    labels, centers, _ = kmeans(X, int(n_clusters), rng if rng is not None else np.random.default_rng(0))
    sizes = np.bincount(labels, minlength=len(centers))
    large = large_cluster_mask(sizes, alpha, beta)
    own = np.sqrt(((X - centers[labels]) ** 2).sum(axis=1))
    _, d2_large = kernels.nearest_centroid(X, centers[large])
    return np.where(large[labels], own, np.sqrt(d2_large))


def score_cblof(frame, n_clusters=8, alpha=0.9, beta=5.0, seed=0, name="CBLOF"):
    rng = np.random.default_rng(seed)
    return ScoreVector(name, frame.ids, cblof_scores(frame.values, n_clusters, rng, alpha, beta))

"""Histogram-based outlier score with equal-width bins."""
import numpy as np

from .base import ScoreVector

HEIGHT_FLOOR = 1e-6


def hbos_scores(X, n_bins=10):
    """Sum over features of ``log10(1 / height)`` of the bin each value falls in.

    Heights are bin counts divided by the tallest bin of that feature, so the
    densest bin contributes 0. Values equal to the column max go to the last bin.
    """
    X = np.asarray(X, dtype=np.float64)
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    n, p = X.shape
    scores = np.zeros(n)
    for j in range(p):
        col = X[:, j]
        lo, hi = col.min(), col.max()
        if hi == lo:
            continue
        pos = np.floor((col - lo) / (hi - lo) * n_bins).astype(np.int64)
        np.clip(pos, 0, n_bins - 1, out=pos)
        counts = np.bincount(pos, minlength=n_bins).astype(np.float64)
        heights = np.maximum(counts / counts.max(), HEIGHT_FLOOR)
        scores += np.log10(1.0 / heights[pos])
    return scores


def score_hbos(frame, n_bins=10, name="HBOS"):
    return ScoreVector(name, frame.ids, hbos_scores(frame.values, n_bins))

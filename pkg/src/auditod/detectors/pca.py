"""Reconstruction error from a principal subspace."""
import numpy as np

from ..errors import ConfigError, EigenFailure
from .base import ScoreVector


def pca_scores(X, n_components):
    """Squared distance of each centred row from its projection onto the top components.

    ``n_components == 0`` reconstructs every row as the column mean.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    k = int(n_components)
    if not 0 <= k <= p:
        raise ConfigError(f"n_components must lie in [0, {p}], got {n_components}")
    Xc = X - X.mean(axis=0)
    if k == 0:
        return np.einsum("ij,ij->i", Xc, Xc)
    cov = Xc.T @ Xc / max(n - 1, 1)
    try:
        evals, evecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"covariance eigendecomposition did not converge: {exc}") from exc
    order = np.argsort(-evals, kind="stable")[:k]
    V = evecs[:, order]
    resid = Xc - (Xc @ V) @ V.T
    return np.einsum("ij,ij->i", resid, resid)


def score_pca(frame, n_components=None, name="PCA"):
    if n_components is None:
        n_components = min(2, frame.p - 1)
    return ScoreVector(name, frame.ids, pca_scores(frame.values, n_components))

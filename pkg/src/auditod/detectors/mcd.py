"""Minimum covariance determinant via random starts and concentration steps."""
import math

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import ConfigError, DegenerateCovariance
from .base import ScoreVector

N_STARTS = 500
MAX_CSTEPS = 100
COND_LIMIT = 1e12
RIDGE = 1e-9


def support_size(n, p, support_fraction):
    """Points kept in each concentration step, never fewer than ``p + 2``."""
    return min(n, max(math.ceil(support_fraction * n), p + 2))


def _regularize(cov):
    evals = np.linalg.eigvalsh(cov)
    top = evals[-1]
    if top > 0 and evals[0] > top / COND_LIMIT:
        return cov
    p = cov.shape[0]
    cov = cov + np.eye(p) * (RIDGE * np.trace(cov) / p)
    evals = np.linalg.eigvalsh(cov)
    if not evals[0] > 0:
        raise DegenerateCovariance("covariance is singular even after diagonal regularization")
    return cov


def _fit(X, rows):
    sub = X[rows]
    mu = sub.mean(axis=0)
    d = sub - mu
    cov = _regularize(d.T @ d / sub.shape[0])
    L = np.linalg.cholesky(cov)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return mu, cov, L, logdet


def _sq_mahalanobis(X, mu, L):
    z = solve_triangular(L, (X - mu).T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def robust_location_scatter(X, support_fraction, rng, n_starts=N_STARTS, max_steps=MAX_CSTEPS):
    """Return ``(mean, covariance, logdet)`` of the best concentrated subset."""
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if n <= p + 1:
        raise ConfigError(f"MCD needs more than p + 1 = {p + 1} records, got {n}")
    h = support_size(n, p, support_fraction)
    best = None
    for _ in range(n_starts):
        rows = np.sort(rng.choice(n, size=p + 1, replace=False))
        mu, cov, L, logdet = _fit(X, rows)
        prev_rows = None
        for _ in range(max_steps):
            d2 = _sq_mahalanobis(X, mu, L)
            new_rows = np.sort(np.argsort(d2, kind="stable")[:h])
            if prev_rows is not None and np.array_equal(new_rows, prev_rows):
                break
            mu_n, cov_n, L_n, logdet_n = _fit(X, new_rows)
            if prev_rows is not None and logdet_n >= logdet:
                break
            mu, cov, L, logdet, prev_rows = mu_n, cov_n, L_n, logdet_n, new_rows
        if best is None or logdet < best[2]:
            best = (mu, cov, logdet)
    return best


def mcd_scores(X, support_fraction, rng):
    mu, cov, _ = robust_location_scatter(X, support_fraction, rng)
    L = np.linalg.cholesky(cov)
    return np.sqrt(_sq_mahalanobis(np.asarray(X, dtype=np.float64), mu, L))


def score_mcd(frame, support_fraction=0.5, seed=0, name="MCD"):
    if not 0.0 <= support_fraction <= 1.0:
        raise ConfigError(f"support_fraction must lie in [0, 1], got {support_fraction}")
    rng = np.random.default_rng(seed)
    return ScoreVector(name, frame.ids, mcd_scores(frame.values, support_fraction, rng))

"""The eight outlier detectors and a config-driven dispatcher.

Every detector maps a :class:`~auditod.data.FeatureFrame` to a
:class:`ScoreVector` oriented so that a larger score is more anomalous.
"""
from ..errors import ConfigError
from .autoencoder import Autoencoder, score_autoencoder
from .base import KINDS, DetectorConfig, ScoreVector, derive_seed, make_rng
from .cblof import kmeans, score_cblof
from .hbos import score_hbos
from .iforest import average_path_length, score_iforest
from .mcd import score_mcd
from .neighbors import NeighborIndex, score_knn, score_lof
from .pca import score_pca

DEFAULT_PARAMS = {
    "HBOS": {"n_bins": 10},
    "PCA": {"n_components": None},
    "MCD": {"support_fraction": 0.5},
    "KNN": {"n_neighbors": 5, "mode": "mean"},
    "LOF": {"n_neighbors": 20},
    "CBLOF": {"n_clusters": 8, "alpha": 0.9, "beta": 5.0},
    "AE": {"hidden_neurons": [64, 32, 32, 64], "epochs": 100, "batch_size": 32, "learning_rate": 1e-3},
    "IFOREST": {"n_estimators": 100, "subsample": 256},
}

# the hyperparameter swept by ``tune`` for each kind
PRIMARY_PARAM = {
    "HBOS": "n_bins",
    "PCA": "n_components",
    "MCD": "support_fraction",
    "KNN": "n_neighbors",
    "LOF": "n_neighbors",
    "CBLOF": "n_clusters",
    "AE": "hidden_neurons",
    "IFOREST": "n_estimators",
}

# reference search grids and tuned values for each kind
REFERENCE_GRIDS = {
    "HBOS": [5, 10, 15, 20, 50, 100],
    "PCA": [0, 1, 2, 3, 4, 5, 6, 7],
    "MCD": [0, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
    "KNN": [1, 3, 5, 10, 20, 30, 40, 50],
    "LOF": [1, 3, 5, 10, 20, 30, 40, 50],
    "CBLOF": [2, 5, 10],
    "AE": [[64, 32, 32, 64], [32, 16, 16, 32]],
    "IFOREST": [50, 100, 200, 300, 400, 500],
}

# best values reported for the original data
REFERENCE_BEST = {
    "HBOS": 20,
    "PCA": 2,
    "MCD": 0.01,
    "KNN": 5,
    "LOF": 5,
    "CBLOF": 5,
    "AE": [64, 32, 32, 64],
    "IFOREST": 100,
}

_FUNCS = {
    "HBOS": score_hbos,
    "PCA": score_pca,
    "MCD": score_mcd,
    "KNN": score_knn,
    "LOF": score_lof,
    "CBLOF": score_cblof,
    "AE": score_autoencoder,
    "IFOREST": score_iforest,
}
_SEEDED = {"MCD", "CBLOF", "AE", "IFOREST"}


def resolve_params(kind, params):
    """Defaults overlaid with ``params``; unknown names are a config error."""
    kind = kind.upper()
    out = dict(DEFAULT_PARAMS[kind])
    unknown = set(params) - set(out)
    if unknown:
        raise ConfigError(f"{kind}: unknown parameter(s) {sorted(unknown)}; allowed: {sorted(out)}")
    out.update(params)
    _check_domain(kind, out)
    return out


def _check_domain(kind, p):
    def positive_int(name):
        v = p[name]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"{kind}: {name} must be a positive integer, got {v!r}")

    if kind == "HBOS":
        positive_int("n_bins")
    elif kind == "PCA":
        v = p["n_components"]
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 0):
            raise ConfigError(f"PCA: n_components must be a non-negative integer, got {v!r}")
    elif kind == "MCD":
        v = p["support_fraction"]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 <= v <= 1:
            raise ConfigError(f"MCD: support_fraction must lie in [0, 1], got {v!r}")
    elif kind in ("KNN", "LOF"):
        positive_int("n_neighbors")
        if kind == "KNN" and p["mode"] not in ("mean", "kth"):
            raise ConfigError(f"KNN: mode must be 'mean' or 'kth', got {p['mode']!r}")
    elif kind == "CBLOF":
        positive_int("n_clusters")
        if not 0.5 < p["alpha"] <= 1:
            raise ConfigError(f"CBLOF: alpha must lie in (0.5, 1], got {p['alpha']!r}")
        if not p["beta"] > 1:
            raise ConfigError(f"CBLOF: beta must exceed 1, got {p['beta']!r}")
    elif kind == "AE":
        h = p["hidden_neurons"]
        if not isinstance(h, (list, tuple)) or not h or any(
            isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in h
        ):
            raise ConfigError(f"AE: hidden_neurons must be a list of positive integers, got {h!r}")
        if list(h) != list(h)[::-1]:
            raise ConfigError(f"AE: hidden_neurons must be symmetric, got {h!r}")
        positive_int("epochs")
        positive_int("batch_size")
        if not p["learning_rate"] > 0:
            raise ConfigError(f"AE: learning_rate must be positive, got {p['learning_rate']!r}")
    elif kind == "IFOREST":
        positive_int("n_estimators")
        if isinstance(p["subsample"], bool) or not isinstance(p["subsample"], int) or p["subsample"] < 2:
            raise ConfigError(f"IFOREST: subsample must be an integer >= 2, got {p['subsample']!r}")


def run_detector(frame, config: DetectorConfig, index=None, seed=None) -> ScoreVector:
    """Score ``frame`` according to ``config``.

    The RNG stream is derived from ``(config.seed, config.name)`` unless an
    explicit ``seed`` is given. ``index`` lets KNN and LOF runs share one
    :class:`NeighborIndex`.
    """
    params = resolve_params(config.kind, config.params)
    kwargs = dict(params)
    if config.kind in _SEEDED:
        kwargs["seed"] = derive_seed(config.seed, config.name) if seed is None else seed
    if config.kind in ("KNN", "LOF") and index is not None:
        kwargs["index"] = index
    return _FUNCS[config.kind](frame, name=config.name, **kwargs)


__all__ = [
    "Autoencoder",
    "DEFAULT_PARAMS",
    "DetectorConfig",
    "KINDS",
    "NeighborIndex",
    "REFERENCE_BEST",
    "REFERENCE_GRIDS",
    "PRIMARY_PARAM",
    "ScoreVector",
    "average_path_length",
    "derive_seed",
    "kmeans",
    "make_rng",
    "resolve_params",
    "run_detector",
    "score_autoencoder",
    "score_cblof",
    "score_hbos",
    "score_iforest",
    "score_knn",
    "score_lof",
    "score_mcd",
    "score_pca",
]

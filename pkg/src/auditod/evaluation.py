"""Metrics against pseudo-labels and hyperparameter sweeps."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .detectors import PRIMARY_PARAM, DetectorConfig, NeighborIndex, derive_seed, run_detector
from .errors import AuditODError, DegenerateLabels, EmptyLabels, UnknownRecordId
from .fusion import descending_order

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelSet:
    positives: frozenset

    def __post_init__(self):
        object.__setattr__(self, "positives", frozenset(str(p) for p in self.positives))

    def __len__(self):
        return len(self.positives)

    def check_against(self, ids):
        known = set(ids)
        for rid in sorted(self.positives):
            if rid not in known:
                raise UnknownRecordId(rid)


def read_labels(path) -> LabelSet:
    """One record id per line; blank lines and ``#`` comments are skipped."""
    ids = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                ids.append(line)
    if not ids:
        raise EmptyLabels(f"{path}: no record ids")
    return LabelSet(frozenset(ids))


def write_labels(path, labels: Iterable[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rid in sorted(labels):
            fh.write(f"{rid}\n")


def top_k_ids(scores, ids, k):
    order = descending_order(scores, ids)
    return [ids[i] for i in order[:k]]


def correction_rate(scores, labels: LabelSet) -> float:
    """Share of labelled records among the ``len(labels)`` highest scores."""
    if not len(labels):
        raise EmptyLabels("correction rate needs at least one label")
    labels.check_against(scores.ids)
    flagged = set(top_k_ids(scores.scores, scores.ids, len(labels)))
    return len(flagged & labels.positives) / len(labels)


def precision_recall_f1(flagged, labels: LabelSet):
    if not len(labels):
        raise EmptyLabels("precision/recall need at least one label")
    flagged = set(flagged)
    hit = len(flagged & labels.positives)
    if not flagged:
        log.warning("empty flagged set; precision reported as 0")
        precision = 0.0
    else:
        precision = hit / len(flagged)
    recall = hit / len(labels)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def roc_auc(scores, labels: LabelSet) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    s = np.asarray(scores.scores, dtype=np.float64)
    y = np.array([rid in labels.positives for rid in scores.ids])
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ROC-AUC needs at least one positive and one negative record")
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    ranks = np.empty(len(s))
    # average 1-based ranks within tie groups
    start = 0
    while start < len(s):
        stop = start + 1
        while stop < len(s) and sorted_s[stop] == sorted_s[start]:
            stop += 1
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class SweepResult:
    kind: str
    param: str
    grid: list = field(default_factory=list)
    best: Any = None
    best_rate: float = 0.0


def _sort_key(value):
    return (sum(value), list(value)) if isinstance(value, (list, tuple)) else (value,)


def sweep(frame, kind, grid, labels: LabelSet, seed=0, base_params=None, name=None) -> SweepResult:
    """Score ``frame`` once per grid value of the kind's main hyperparameter.

    The best value maximises the correction rate; ties go to the smallest
    value. Each run is seeded from ``(seed, kind, value)``.
    """
    kind = kind.upper()
    grid = list(grid)
    if not grid:
        raise ValueError("grid must not be empty")
    labels.check_against(frame.ids)
    param = PRIMARY_PARAM[kind]
    index = NeighborIndex(frame.values) if kind in ("KNN", "LOF") else None
    rows = []
    for value in grid:
        params = dict(base_params or {})
        params[param] = value
        config = DetectorConfig(kind, params, seed, name=name or kind)
        try:
            scores = run_detector(frame, config, index=index, seed=derive_seed(seed, kind, value))
        except AuditODError as exc:
            exc.args = (f"{kind} {param}={value!r}: {exc}",)
            raise
        rows.append((value, correction_rate(scores, labels)))
    best_value, best_rate = rows[0]
    for value, rate in rows[1:]:
        if rate > best_rate or (rate == best_rate and _sort_key(value) < _sort_key(best_value)):
            best_value, best_rate = value, rate
    return SweepResult(kind, param, rows, best_value, best_rate)

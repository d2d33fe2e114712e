"""Score normalisation, ordering/ranking tables and the three ensembles."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detectors.base import ScoreVector


def minmax(values):
    """Min-max onto [0, 1]; a constant vector maps to zeros."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def normalize_scores(raw: ScoreVector) -> ScoreVector:
    if raw.normalized:
        raise ValueError(f"{raw.detector}: scores are already normalized")
    return ScoreVector(raw.detector, raw.ids, minmax(raw.scores), normalized=True)


def descending_order(scores, ids):
    """Row indices sorted by score (high first), ties by ascending record id."""
    # np.lexsort sorts by the last key first
    id_rank = np.argsort(np.asarray(ids, dtype=object), kind="stable")
    id_pos = np.empty(len(ids), dtype=np.int64)
    id_pos[id_rank] = np.arange(len(ids))
    return np.lexsort((id_pos, -np.asarray(scores, dtype=np.float64)))


def tie_average_ranks(scores, order):
    """Mean ordering position of every group of equal scores.

    ``order`` lists row indices from ordering 1 to n.
    """
    s = np.asarray(scores, dtype=np.float64)[order]
    n = len(s)
    ranks_sorted = np.empty(n)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and s[stop] == s[start]:
            stop += 1
        # orderings start+1 .. stop
        ranks_sorted[start:stop] = (start + 1 + stop) / 2.0
        start = stop
    ranks = np.empty(n)
    ranks[order] = ranks_sorted
    return ranks


@dataclass(frozen=True)
class RankTable:
    """Ordering and tie-averaged ranking for one normalized score vector.

    Arrays are aligned with ``ids`` (input record order); :meth:`rows` gives
    the table sorted by ordering.
    """

    detector: str
    ids: tuple
    norm_scores: np.ndarray
    ordering: np.ndarray
    ranking: np.ndarray

    def rows(self):
        order = np.argsort(self.ordering)
        return [
            (self.ids[i], float(self.norm_scores[i]), int(self.ordering[i]), float(self.ranking[i]))
            for i in order
        ]

    def top(self, k):
        order = np.argsort(self.ordering)[:k]
        return [self.ids[i] for i in order]


def make_rank_table(norm: ScoreVector) -> RankTable:
    if not norm.normalized:
        raise ValueError(f"{norm.detector}: rank tables need normalized scores")
    order = descending_order(norm.scores, norm.ids)
    ordering = np.empty(len(order), dtype=np.int64)
    ordering[order] = np.arange(1, len(order) + 1)
    ranking = tie_average_ranks(norm.scores, order)
    return RankTable(norm.detector, norm.ids, norm.scores, ordering, ranking)


def _check_aligned(items):
    ids = items[0].ids
    for it in items[1:]:
        if it.ids != ids:
            raise ValueError(f"{it.detector} is not aligned on the same record ids as {items[0].detector}")
    return ids


def top_k_frequency(tables: Sequence[RankTable], k: int) -> dict:
    """How many tables put each record among their ``k`` best orderings.

    Records that never make a top-``k`` list are left out. The result is
    sorted by descending count, then record id.
    """
    if not tables:
        return {}
    _check_aligned(list(tables))
    n = len(tables[0].ids)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n = {n}, got {k}")
    counts = Counter()
    for t in tables:
        counts.update(t.top(k))
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


@dataclass(frozen=True)
class EnsembleResult:
    """One ensemble value per record, plus its descending ordering."""

    ids: tuple
    values: np.ndarray
    order: np.ndarray

    def ranked(self):
        return [(self.ids[i], float(self.values[i])) for i in self.order]


def ensemble_average_score(norm_vectors: Sequence[ScoreVector]) -> EnsembleResult:
    """Mean normalized score across detectors, min-maxed again over records."""
    if not norm_vectors:
        raise ValueError("need at least one score vector")
    ids = _check_aligned(list(norm_vectors))
    if not all(v.normalized for v in norm_vectors):
        raise ValueError("average-score ensemble needs normalized vectors")
    mean = np.mean([v.scores for v in norm_vectors], axis=0)
    values = minmax(mean)
    return EnsembleResult(ids, values, descending_order(values, ids))


def ensemble_average_rank(tables: Sequence[RankTable]) -> EnsembleResult:
    """``1 - minmax(mean ranking)``: the record ranked best everywhere scores 1."""
    if not tables:
        raise ValueError("need at least one rank table")
    ids = _check_aligned(list(tables))
    mean = np.mean([t.ranking for t in tables], axis=0)
    values = 1.0 - minmax(mean)
    return EnsembleResult(ids, values, descending_order(values, ids))


@dataclass(frozen=True)
class EnsembleSummary:
    ids: tuple
    avg_norm_score: np.ndarray
    one_minus_avg_rank: np.ndarray
    frequency: np.ndarray
    k: int
    detector_count: int

    def rows(self):
        """Records sorted by average normalized score (ties by id)."""
        order = descending_order(self.avg_norm_score, self.ids)
        return [
            (self.ids[i], float(self.avg_norm_score[i]), float(self.one_minus_avg_rank[i]), int(self.frequency[i]))
            for i in order
        ]


def summarize(norm_vectors: Sequence[ScoreVector], tables: Sequence[RankTable], k: int) -> EnsembleSummary:
    avg = ensemble_average_score(norm_vectors)
    rank = ensemble_average_rank(tables)
    freq = top_k_frequency(tables, k)
    counts = np.array([freq.get(i, 0) for i in avg.ids], dtype=np.int64)
    return EnsembleSummary(avg.ids, avg.values, rank.values, counts, int(k), len(tables))

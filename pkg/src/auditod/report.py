"""End-to-end runs and their on-disk artifacts.

Every CSV uses a fixed header (see ``*_HEADER`` below), comma delimiter,
LF line endings and ``.17g`` floats so values round-trip exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from ._accel import USE_NUMBA
from .config import RunConfig
from .data import DERIVED_NAMES, DEFAULT_HEADERS, ORIGINAL_LETTERS, FeatureFrame, compute_derived, impute_mean, ingest_csv, minmax_scale
from .detectors import NeighborIndex, derive_seed, resolve_params, run_detector
from .errors import AuditODError, ConfigError, DataError
from .detectors.base import ScoreVector
from .evaluation import LabelSet, precision_recall_f1, roc_auc, sweep, top_k_ids
from .fusion import EnsembleSummary, make_rank_table, normalize_scores, summarize

log = logging.getLogger(__name__)

SCORES_HEADER = ("record_id", "detector", "raw_score", "norm_score", "ordering", "ranking")
ENSEMBLE_HEADER = ("record_id", "avg_norm_score", "one_minus_avg_rank", "frequency")
FREQ_HEADER = ("award_id", "frequency")
SCORE_LINE_HEADER = ("order_index", "record_id", "avg_norm_score")
RANK_LINE_HEADER = ("order_index", "record_id", "one_minus_avg_rank")
TUNE_HEADER = ("detector", "parameter", "value", "correction_rate")
TUNE_SUMMARY_HEADER = ("method", "hyperparameter", "grid", "best_parameter", "correction_rate_pct")


def fmt(x) -> str:
    return format(float(x), ".17g")


class StageError(AuditODError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.cause = exc
        self.exit_code = getattr(exc, "exit_code", 3 if isinstance(exc, OSError) else 1)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, et, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, (AuditODError, OSError)):
            raise StageError(self.name, exc) from exc
        return False


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def prepare_frame(config: RunConfig) -> FeatureFrame:
    if not config.input:
        raise ConfigError("no input file given")
    with _Stage("ingest"):
        table = ingest_csv(config.input, config.column_mapping)
    with _Stage("derive"):
        table = compute_derived(table, config.column_mapping)
    with _Stage("impute"):
        table = impute_mean(table.select(list(config.features)))
    with _Stage("scale"):
        return minmax_scale(table)


def score_all(frame, detectors, jobs=1):
    """Raw score vectors for every detector config, in config order."""
    nn_ks = [resolve_params(d.kind, d.params)["n_neighbors"] for d in detectors if d.kind in ("KNN", "LOF")]
    index = None
    if nn_ks:
        index = NeighborIndex(frame.values)
        with _Stage("neighbors"):
            kmax = max(nn_ks)
            if kmax < frame.n:
                index.query(kmax)

    def one(det):
        with _Stage(f"detector {det.name}"):
            return run_detector(frame, det, index=index)

    if jobs > 1 and len(detectors) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, detectors))
    return [one(d) for d in detectors]


@dataclass
class RunResult:
    config: RunConfig
    frame: FeatureFrame
    raw: list
    tables: list
    summary: EnsembleSummary
    frequency: dict
    report: dict


def run(config: RunConfig, write=True) -> RunResult:
    frame = prepare_frame(config)
    raw = score_all(frame, config.detectors, config.jobs)
    with _Stage("fusion"):
        norm = [normalize_scores(r) for r in raw]
        tables = [make_rank_table(v) for v in norm]
        k = min(config.top_k, frame.n)
        summary = summarize(norm, tables, k)
        frequency = {rid: c for rid, c in zip(summary.ids, summary.frequency) if c}
        frequency = dict(sorted(frequency.items(), key=lambda kv: (-kv[1], kv[0])))
    report = build_report(config, frame, tables, summary, frequency)
    result = RunResult(config, frame, raw, tables, summary, frequency, report)
    if write:
        with _Stage("write"):
            write_outputs(result, config.out_dir)
    return result


def build_report(config, frame, tables, summary, frequency):
    k = summary.k
    rows = summary.rows()
    by_rank = sorted(rows, key=lambda r: (-r[2], r[0]))
    return {
        "config": config.to_dict(),
        "records": frame.n,
        "features": list(frame.columns),
        "feature_stats": {
            c: {"min": float(s[0]), "max": float(s[1]), "mean": float(s[2])} for c, s in zip(frame.columns, frame.stats)
        },
        "detectors": [
            {
                "name": d.name,
                "kind": d.kind,
                "params": resolve_params(d.kind, d.params),
                "rng_seed": derive_seed(config.seed, d.name),
                "rank_table": "scores.csv",
            }
            for d in config.detectors
        ],
        "ensemble": {
            "file": "ensemble.csv",
            "k": k,
            "detector_count": summary.detector_count,
        },
        "flagged": {
            "avg_norm_score": [{"record_id": r[0], "value": r[1]} for r in rows[:k]],
            "one_minus_avg_rank": [{"record_id": r[0], "value": r[2]} for r in by_rank[:k]],
            "frequency": [{"record_id": rid, "count": int(c)} for rid, c in list(frequency.items())[:k]],
        },
        "provenance": {
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "seed": config.seed,
            "input_sha256": file_digest(config.input) if config.input and os.path.exists(config.input) else None,
            "package_version": __version__,
            "numba": USE_NUMBA,
        },
    }


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _open(path):
    return open(path, "w", newline="", encoding="utf-8")


def write_scores(path, raw, tables):
    with _open(path) as fh:
        w = _writer(fh)
        w.writerow(SCORES_HEADER)
        for vec, table in zip(raw, tables):
            order = np.argsort(table.ordering)
            for i in order:
                w.writerow(
                    (table.ids[i], table.detector, fmt(vec.scores[i]), fmt(table.norm_scores[i]),
                     int(table.ordering[i]), fmt(table.ranking[i]))
                )


def write_outputs(result: RunResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_scores(os.path.join(out_dir, "scores.csv"), result.raw, result.tables)
    rows = result.summary.rows()
    with _open(os.path.join(out_dir, "ensemble.csv")) as fh:
        w = _writer(fh)
        w.writerow(ENSEMBLE_HEADER)
        for rid, avg, one_minus, freq in rows:
            w.writerow((rid, fmt(avg), fmt(one_minus), freq))
    with _open(os.path.join(out_dir, "freq_chart.csv")) as fh:
        w = _writer(fh)
        w.writerow(FREQ_HEADER)
        for rid, count in result.frequency.items():
            w.writerow((rid, count))
    with _open(os.path.join(out_dir, "score_line.csv")) as fh:
        w = _writer(fh)
        w.writerow(SCORE_LINE_HEADER)
        for pos, (rid, avg, _, _) in enumerate(rows, start=1):
            w.writerow((pos, rid, fmt(avg)))
    by_rank = sorted(rows, key=lambda r: (-r[2], r[0]))
    with _open(os.path.join(out_dir, "rank_line.csv")) as fh:
        w = _writer(fh)
        w.writerow(RANK_LINE_HEADER)
        for pos, (rid, _, one_minus, _) in enumerate(by_rank, start=1):
            w.writerow((pos, rid, fmt(one_minus)))
    with _open(os.path.join(out_dir, "report.json")) as fh:
        json.dump(result.report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def report_digest(path) -> str:
    """Digest of a report.json with the timestamp field removed."""
    with open(path, encoding="utf-8") as fh:
        rep = json.load(fh)
    rep.get("provenance", {}).pop("generated_at", None)
    return hashlib.sha256(json.dumps(rep, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- tuning


def tune(config: RunConfig, labels: LabelSet, write=True):
    frame = prepare_frame(config)
    with _Stage("labels"):
        labels.check_against(frame.ids)
    results = []
    for det in config.detectors:
        base = {k: v for k, v in det.params.items()}
        with _Stage(f"sweep {det.name}"):
            results.append(sweep(frame, det.kind, config.grid_for(det), labels, config.seed, base, det.name))
    if write:
        with _Stage("write"):
            write_tune(config.out_dir, config.detectors, results)
    return results


def write_tune(out_dir, detectors, results):
    os.makedirs(out_dir, exist_ok=True)
    with _open(os.path.join(out_dir, "tune.csv")) as fh:
        w = _writer(fh)
        w.writerow(TUNE_HEADER)
        for det, res in zip(detectors, results):
            for value, rate in res.grid:
                w.writerow((det.name, res.param, json.dumps(value), fmt(rate)))
    with _open(os.path.join(out_dir, "tune_summary.csv")) as fh:
        w = _writer(fh)
        w.writerow(TUNE_SUMMARY_HEADER)
        for det, res in zip(detectors, results):
            grid = json.dumps([v for v, _ in res.grid])
            w.writerow((det.name, res.param, grid, json.dumps(res.best), fmt(100.0 * res.best_rate)))


# ---------------------------------------------------------------- synthetic CSV


def synthetic_headers(p, id_column="contract_award_unique_key"):
    if p < len(ORIGINAL_LETTERS):
        raise ConfigError(f"synthetic CSV needs p >= {len(ORIGINAL_LETTERS)} to fill columns A-G, got {p}")
    names = [DEFAULT_HEADERS[k] for k in ORIGINAL_LETTERS]
    extra = [DERIVED_NAMES[k] for k in sorted(DERIVED_NAMES)]
    for j in range(len(ORIGINAL_LETTERS), p):
        i = j - len(ORIGINAL_LETTERS)
        names.append(extra[i] if i < len(extra) else f"synthetic_feature_{j + 1}")
    return [id_column] + names


def write_synthetic(out_dir, data):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "synthetic.csv")
    with _open(csv_path) as fh:
        w = _writer(fh)
        w.writerow(synthetic_headers(data.values.shape[1]))
        for rid, row in zip(data.ids, data.values):
            w.writerow([rid] + [fmt(v) for v in row])
    labels_path = os.path.join(out_dir, "labels.txt")
    with open(labels_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# planted anomalies\n")
        for rid in sorted(data.labels.positives):
            fh.write(f"{rid}\n")
    return csv_path, labels_path


# ---------------------------------------------------------------- evaluation


def _read_csv(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        got = tuple(next(reader, ()))
        if got != header:
            raise DataError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        return list(reader)


def _metrics(vec, labels, k):
    flagged = top_k_ids(vec.scores, vec.ids, k)
    precision, recall, f1 = precision_recall_f1(flagged, labels)
    return {"precision": precision, "recall": recall, "f1": f1, "roc_auc": roc_auc(vec, labels)}


def evaluate_files(scores_path, labels: LabelSet, k, ensemble_path=None):
    """Precision/recall/F1 at top-``k`` and ROC-AUC for every detector and ensemble."""
    by_det = {}
    for rid, det, _raw, norm, ordering, _rank in _read_csv(scores_path, SCORES_HEADER):
        by_det.setdefault(det, []).append((rid, float(norm), int(ordering)))
    if not by_det:
        raise DataError(f"{scores_path}: no score rows")
    vectors = {}
    for det, rows in by_det.items():
        # the ordering column already encodes the run's tie-break; preserve it
        rows.sort(key=lambda r: r[2])
        vectors[det] = ScoreVector(det, [r[0] for r in rows], [r[1] for r in rows], normalized=True)
    ens = {}
    if ensemble_path and os.path.exists(ensemble_path):
        rows = _read_csv(ensemble_path, ENSEMBLE_HEADER)
        ids = [r[0] for r in rows]
        ens["avg_norm_score"] = ScoreVector("avg_norm_score", ids, [float(r[1]) for r in rows], normalized=True)
        ens["one_minus_avg_rank"] = ScoreVector("one_minus_avg_rank", ids, [float(r[2]) for r in rows], normalized=True)
        ens["frequency"] = ScoreVector("frequency", ids, [float(r[3]) for r in rows])
    n = len(next(iter(vectors.values())))
    if k > n:
        log.warning("k=%d exceeds the %d records; clamping to %d", k, n, n)
        k = n
    first = next(iter(vectors.values()))
    labels.check_against(first.ids)
    out = {"k": k, "labels": len(labels), "records": n, "detectors": {}, "ensembles": {}}
    for det, vec in vectors.items():
        out["detectors"][det] = _detector_metrics(vec, labels, k)
    for name, vec in ens.items():
        out["ensembles"][name] = _metrics(vec, labels, k)
    return out


def _detector_metrics(vec, labels, k):
    # rows arrive in ordering order, so the first k are exactly the run's top-k
    flagged = list(vec.ids[:k])
    precision, recall, f1 = precision_recall_f1(flagged, labels)
    return {"precision": precision, "recall": recall, "f1": f1, "roc_auc": roc_auc(vec, labels)}

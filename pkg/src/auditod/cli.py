"""``auditod`` command line: run, tune, synth, eval.

Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
import argparse
import json
import logging
import os
import sys

from . import __version__
from .config import RunConfig, load_config
from .errors import AuditODError, ConfigError
from .evaluation import read_labels
from .report import evaluate_files, run, tune, write_synthetic
from .synthetic import SyntheticSpec, synthesize

log = logging.getLogger("auditod")


def _config_from_args(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return config.with_overrides(
        input=args.input,
        out_dir=args.out_dir,
        seed=args.seed,
        top_k=args.top_k,
        jobs=args.jobs,
        detectors=args.detectors,
    )


def cmd_run(args):
    config = _config_from_args(args)
    result = run(config)
    print(f"scored {result.frame.n} records with {len(config.detectors)} detectors -> {config.out_dir}")
    for item in result.report["flagged"]["avg_norm_score"]:
        print(f"  {item['record_id']}\t{item['value']:.4f}")
    return 0


def cmd_tune(args):
    config = _config_from_args(args)
    labels = read_labels(args.labels)
    results = tune(config, labels)
    for det, res in zip(config.detectors, results):
        print(f"{det.name:10s} {res.param}={json.dumps(res.best)}  rate={100 * res.best_rate:.0f}%")
    return 0


def cmd_synth(args):
    spec = SyntheticSpec(args.n_inliers, args.n_anomalies, args.p, args.shift, args.seed)
    data = synthesize(spec)
    csv_path, labels_path = write_synthetic(args.out_dir or ".", data)
    print(f"wrote {csv_path} ({len(data.ids)} rows) and {labels_path}")
    return 0


def cmd_eval(args):
    if args.k < 1:
        raise ConfigError(f"--k must be >= 1, got {args.k}")
    labels = read_labels(args.labels)
    ensemble = args.ensemble or os.path.join(os.path.dirname(args.scores) or ".", "ensemble.csv")
    metrics = evaluate_files(args.scores, labels, args.k, ensemble)
    out_dir = args.out_dir or os.path.dirname(args.scores) or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "metrics.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, m in {**metrics["detectors"], **metrics["ensembles"]}.items():
        print(f"{name:20s} P={m['precision']:.3f} R={m['recall']:.3f} F1={m['f1']:.3f} AUC={m['roc_auc']:.3f}")
    return 0


def _add_run_flags(p):
    p.add_argument("--config", help="JSON run configuration (a report.json also works)")
    p.add_argument("--input", help="CSV extract to score")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--jobs", type=int, help="detectors evaluated concurrently")
    p.add_argument("--detectors", help="comma list of detector names or kinds")


def build_parser():
    parser = argparse.ArgumentParser(prog="auditod", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="score records and write ranked reports")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tune", help="sweep hyperparameters against pseudo-labels")
    _add_run_flags(p)
    p.add_argument("--labels", required=True, help="file with one record id per line")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("synth", help="write a planted-anomaly CSV and its labels")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-inliers", type=int, default=2000)
    p.add_argument("--n-anomalies", type=int, default=20)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--shift", type=float, default=6.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="precision/recall/F1/ROC-AUC of a previous run")
    p.add_argument("--scores", required=True, help="scores.csv from a run")
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ensemble", help="ensemble.csv (defaults to the one next to --scores)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except AuditODError as exc:
        print(f"auditod: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"auditod: error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

import csv
import hashlib
import json

import pytest

from auditod import report
from auditod.cli import main
from auditod.config import RunConfig, load_config
from auditod.detectors import KINDS, REFERENCE_GRIDS
from auditod.errors import ConfigError, UnknownRecordId
from auditod.evaluation import read_labels


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def synth(tmp_path, name="data", *extra):
    out = tmp_path / name
    assert main(["synth", "--out-dir", str(out), *extra]) == 0
    return out / "synthetic.csv", out / "labels.txt"


FAST = ["--detectors", "HBOS,PCA,KNN,LOF,CBLOF,IFOREST"]


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("small")
    csv_path, labels = synth(tmp, "data", "--n-inliers", "300", "--n-anomalies", "6", "--p", "7", "--seed", "3")
    return tmp, csv_path, labels


@pytest.fixture(scope="module")
def small_run(small):
    tmp, csv_path, _ = small
    out = tmp / "run"
    assert main(["run", "--input", str(csv_path), "--out-dir", str(out)]) == 0
    return out


class TestSynth:
    def test_default_shape(self, tmp_path):
        csv_path, labels = synth(tmp_path)
        table = rows(csv_path)
        assert len(table) == 2021
        assert all(len(r) == 11 for r in table)
        assert table[0] == report.synthetic_headers(10)
        assert len(read_labels(labels)) == 20

    def test_digests(self, tmp_path):
        a, _ = synth(tmp_path, "a", "--n-inliers", "50", "--n-anomalies", "2", "--p", "7")
        b, _ = synth(tmp_path, "b", "--n-inliers", "50", "--n-anomalies", "2", "--p", "7")
        c, _ = synth(tmp_path, "c", "--n-inliers", "50", "--n-anomalies", "2", "--p", "7", "--seed", "43")
        assert sha(a) == sha(b)
        assert sha(a) != sha(c)

    def test_too_few_columns(self, tmp_path):
        assert main(["synth", "--out-dir", str(tmp_path), "--p", "3"]) == 2

    def test_bad_spec(self, tmp_path):
        assert main(["synth", "--out-dir", str(tmp_path), "--shift", "0"]) == 2


class TestRun:
    def test_headers(self, small_run):
        expected = {
            "scores.csv": report.SCORES_HEADER,
            "ensemble.csv": report.ENSEMBLE_HEADER,
            "freq_chart.csv": report.FREQ_HEADER,
            "score_line.csv": report.SCORE_LINE_HEADER,
            "rank_line.csv": report.RANK_LINE_HEADER,
        }
        for name, header in expected.items():
            assert tuple(rows(small_run / name)[0]) == header
        assert report.SCORES_HEADER == ("record_id", "detector", "raw_score", "norm_score", "ordering", "ranking")
        assert report.ENSEMBLE_HEADER == ("record_id", "avg_norm_score", "one_minus_avg_rank", "frequency")

    def test_line_endings(self, small_run):
        data = (small_run / "scores.csv").read_bytes()
        assert b"\r\n" not in data

    def test_scores_layout(self, small_run):
        body = rows(small_run / "scores.csv")[1:]
        assert len(body) == 306 * len(KINDS)
        assert {r[1] for r in body} == set(KINDS)

    def test_plot_data(self, small_run):
        line = rows(small_run / "score_line.csv")[1:]
        assert len(line) == 306
        vals = [float(r[2]) for r in line]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert [int(r[0]) for r in line] == list(range(1, 307))
        rank = [float(r[2]) for r in rows(small_run / "rank_line.csv")[1:]]
        assert len(rank) == 306 and all(a >= b for a, b in zip(rank, rank[1:]))

    def test_frequency_sum(self, small_run):
        freq = rows(small_run / "freq_chart.csv")[1:]
        assert sum(int(c) for _, c in freq) == 5 * len(KINDS)
        counts = [int(c) for _, c in freq]
        assert counts == sorted(counts, reverse=True)

    def test_floats_round_trip(self, small_run):
        for r in rows(small_run / "ensemble.csv")[1:50]:
            assert report.fmt(float(r[1])) == r[1]

    def test_report_contents(self, small_run, small):
        rep = json.loads((small_run / "report.json").read_text())
        assert rep["records"] == 306
        assert [d["kind"] for d in rep["detectors"]] == list(KINDS)
        assert rep["provenance"]["input_sha256"] == sha(small[1])
        assert rep["config"]["detectors"][0]["params"] == {"n_bins": 10}
        assert len(rep["flagged"]["avg_norm_score"]) == 5

    def test_byte_identical_rerun(self, small, small_run, tmp_path):
        _, csv_path, _ = small
        out = tmp_path / "again"
        assert main(["run", "--input", str(csv_path), "--out-dir", str(out)]) == 0
        for name in ("scores.csv", "ensemble.csv", "freq_chart.csv", "score_line.csv", "rank_line.csv"):
            assert sha(out / name) == sha(small_run / name), name
        # same config, same directory: the report matches too
        first = report.report_digest(out / "report.json")
        assert main(["run", "--input", str(csv_path), "--out-dir", str(out)]) == 0
        assert report.report_digest(out / "report.json") == first

    def test_reproduce_from_report(self, small_run, tmp_path):
        out = tmp_path / "repro"
        assert main(["run", "--config", str(small_run / "report.json"), "--out-dir", str(out)]) == 0
        for name in ("scores.csv", "ensemble.csv", "freq_chart.csv", "score_line.csv", "rank_line.csv"):
            assert sha(out / name) == sha(small_run / name), name

    def test_jobs_do_not_change_output(self, small, small_run, tmp_path):
        _, csv_path, _ = small
        out = tmp_path / "par"
        assert main(["run", "--input", str(csv_path), "--out-dir", str(out), "--jobs", "3"]) == 0
        assert sha(out / "scores.csv") == sha(small_run / "scores.csv")

    def test_seed_changes_seeded_detectors(self, small, small_run, tmp_path):
        _, csv_path, _ = small
        out = tmp_path / "s1"
        assert main(["run", "--input", str(csv_path), "--out-dir", str(out), "--seed", "1", *FAST]) == 0
        by_det = {}
        for r in rows(out / "scores.csv")[1:]:
            by_det.setdefault(r[1], []).append(r)
        base = {}
        for r in rows(small_run / "scores.csv")[1:]:
            base.setdefault(r[1], []).append(r)
        assert by_det["HBOS"] == base["HBOS"]
        assert by_det["IFOREST"] != base["IFOREST"]

    def test_dominant_record_heads_outputs(self, tmp_path):
        # a lone planted record sits on a corner of the unit cube, which the
        # autoencoder's saturating output reconstructs well, so it is left out
        csv_path, labels = synth(
            tmp_path, "dom", "--n-inliers", "300", "--n-anomalies", "1", "--p", "7", "--shift", "6", "--seed", "5"
        )
        target = next(iter(read_labels(labels).positives))
        out = tmp_path / "out"
        kinds = [k for k in KINDS if k != "AE"]
        assert main(["run", "--input", str(csv_path), "--out-dir", str(out), "--detectors", ",".join(kinds)]) == 0
        for name in ("ensemble.csv", "freq_chart.csv"):
            assert rows(out / name)[1][0] == target, name
        for name in ("score_line.csv", "rank_line.csv"):
            assert rows(out / name)[1][1] == target, name
        heads = {}
        for r in rows(out / "scores.csv")[1:]:
            if r[4] == "1":
                heads[r[1]] = r[0]
        assert set(heads.values()) == {target}
        assert len(heads) == len(kinds)


class TestRunErrors:
    def test_empty_detectors_before_io(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        out = tmp_path / "never"
        cfg.write_text(json.dumps({"input": str(tmp_path / "missing.csv"), "detectors": [], "out_dir": str(out)}))
        assert main(["run", "--config", str(cfg)]) == 2
        assert not out.exists()
        with pytest.raises(ConfigError):
            RunConfig(detectors=())

    def test_missing_input(self, tmp_path):
        assert main(["run", "--input", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path / "o")]) == 3

    def test_no_input(self, tmp_path):
        assert main(["run", "--out-dir", str(tmp_path / "o")]) == 2

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,x\n1,2\n")
        assert main(["run", "--input", str(path), "--out-dir", str(tmp_path / "o")]) == 3

    def test_unknown_detector(self, small, tmp_path):
        assert main(["run", "--input", str(small[1]), "--detectors", "FOO", "--out-dir", str(tmp_path)]) == 2

    def test_bad_param(self, small, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"detectors": [{"kind": "KNN", "params": {"n_neighbors": 0}}]}))
        assert main(["run", "--config", str(cfg), "--input", str(small[1])]) == 2

    def test_bad_json(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["run", "--config", str(cfg)]) == 2

    def test_top_k(self, tmp_path):
        assert main(["run", "--top-k", "0", "--input", "x.csv"]) == 2


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig(seed=7, top_k=3)
        again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()

    def test_repeated_kind_needs_names(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"detectors": ["KNN", "KNN"]})
        cfg = RunConfig.from_dict(
            {"detectors": [{"kind": "KNN"}, {"kind": "KNN", "name": "KNN10", "params": {"n_neighbors": 10}}]}
        )
        assert [d.name for d in cfg.detectors] == ["KNN", "KNN10"]

    def test_unknown_keys(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"sed": 1})

    def test_load(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"seed": 3, "features": ["a", "b", "h"]}))
        cfg = load_config(p)
        assert cfg.seed == 3 and cfg.features == ("A", "B", "H")


class TestTune:
    def test_rows_per_grid_value(self, small, tmp_path):
        _, csv_path, labels = small
        out = tmp_path / "tune"
        dets = "HBOS,PCA,KNN,LOF,CBLOF"
        assert main(["tune", "--input", str(csv_path), "--labels", str(labels), "--out-dir", str(out), "--detectors", dets]) == 0
        body = rows(out / "tune.csv")
        assert tuple(body[0]) == report.TUNE_HEADER
        expected = sum(len(REFERENCE_GRIDS[k]) for k in dets.split(","))
        assert len(body) - 1 == expected
        for kind in dets.split(","):
            values = [json.loads(r[2]) for r in body[1:] if r[0] == kind]
            assert values == list(REFERENCE_GRIDS[kind])
        summary = rows(out / "tune_summary.csv")
        assert tuple(summary[0]) == report.TUNE_SUMMARY_HEADER
        assert len(summary) == 6

    def test_single_value(self, small, tmp_path):
        _, csv_path, labels = small
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"detectors": [{"kind": "HBOS", "grid": [10]}]}))
        out = tmp_path / "t"
        assert main(["tune", "--config", str(cfg), "--input", str(csv_path), "--labels", str(labels), "--out-dir", str(out)]) == 0
        assert len(rows(out / "tune.csv")) == 2

    def test_unknown_label(self, small, tmp_path):
        _, csv_path, _ = small
        labels = tmp_path / "l.txt"
        labels.write_text("NOT-A-RECORD\n")
        assert main(["tune", "--input", str(csv_path), "--labels", str(labels), "--detectors", "HBOS"]) == 3
        cfg = RunConfig(input=str(csv_path), detectors=RunConfig().select_detectors("HBOS"))
        with pytest.raises(report.StageError) as exc:
            report.tune(cfg, read_labels(labels), write=False)
        assert isinstance(exc.value.cause, UnknownRecordId)

    def test_empty_labels(self, small, tmp_path):
        labels = tmp_path / "l.txt"
        labels.write_text("# nothing\n")
        assert main(["tune", "--input", str(small[1]), "--labels", str(labels)]) == 3


class TestEval:
    def test_metrics(self, small, small_run):
        _, _, labels = small
        assert main(["eval", "--scores", str(small_run / "scores.csv"), "--labels", str(labels), "--k", "6"]) == 0
        m = json.loads((small_run / "metrics.json").read_text())
        assert m["k"] == 6
        assert set(m["detectors"]) == set(KINDS)
        assert set(m["ensembles"]) == {"avg_norm_score", "one_minus_avg_rank", "frequency"}
        assert m["detectors"]["KNN"]["precision"] == m["detectors"]["KNN"]["recall"] == 1.0
        for block in (m["detectors"], m["ensembles"]):
            for vals in block.values():
                assert all(0.0 <= v <= 1.0 for v in vals.values())

    def test_clamp(self, small, small_run, tmp_path, caplog):
        _, _, labels = small
        assert main(["eval", "--scores", str(small_run / "scores.csv"), "--labels", str(labels),
                     "--k", "10000", "--out-dir", str(tmp_path)]) == 0
        m = json.loads((tmp_path / "metrics.json").read_text())
        assert m["k"] == 306
        assert m["detectors"]["HBOS"]["recall"] == 1.0

    def test_constant_scores(self, tmp_path):
        path = tmp_path / "scores.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(report.SCORES_HEADER)
            for i in range(4):
                w.writerow((f"r{i}", "FLAT", "1", "0", i + 1, "2.5"))
        labels = tmp_path / "l.txt"
        labels.write_text("r2\n")
        assert main(["eval", "--scores", str(path), "--labels", str(labels), "--k", "1"]) == 0
        m = json.loads((tmp_path / "metrics.json").read_text())
        assert m["detectors"]["FLAT"]["roc_auc"] == 0.5

    def test_bad_k(self, small, small_run):
        assert main(["eval", "--scores", str(small_run / "scores.csv"), "--labels", str(small[2]), "--k", "0"]) == 2

    def test_degenerate(self, small_run, tmp_path):
        ids = [r[0] for r in rows(small_run / "ensemble.csv")[1:]]
        labels = tmp_path / "l.txt"
        labels.write_text("\n".join(ids) + "\n")
        # every record positive leaves no negatives for ROC-AUC
        assert main(["eval", "--scores", str(small_run / "scores.csv"), "--labels", str(labels),
                     "--out-dir", str(tmp_path)]) == 3

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("a,b\n")
        labels = tmp_path / "l.txt"
        labels.write_text("x\n")
        assert main(["eval", "--scores", str(path), "--labels", str(labels)]) == 3

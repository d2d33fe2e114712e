import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from auditod.data import (
    ALL_LETTERS,
    DEFAULT_HEADERS,
    DEFAULT_ID_COLUMN,
    ORIGINAL_LETTERS,
    ColumnMapping,
    FeatureFrame,
    RawTable,
    compute_derived,
    impute_mean,
    ingest_csv,
    load_features,
    minmax_scale,
    parse_amount,
)
from auditod.errors import (
    AllMissingColumn,
    ConfigError,
    DuplicateRecordId,
    EmptyTable,
    MissingHeader,
    NonFiniteInput,
)

HEADER = [DEFAULT_ID_COLUMN] + [DEFAULT_HEADERS[k] for k in ORIGINAL_LETTERS]


def write_csv(path, rows, header=HEADER):
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def table(cols, ids=None, headers=None):
    values = np.column_stack([np.asarray(c, dtype=float) for c in cols])
    ids = ids or tuple(f"r{i}" for i in range(values.shape[0]))
    headers = headers or tuple(ALL_LETTERS[: values.shape[1]])
    return RawTable(ids, headers, values)


class TestParseAmount:
    @pytest.mark.parametrize(
        "cell, expected",
        [
            ("96270", 96270.0),
            ("$1,234.50", 1234.5),
            ("(1,000)", -1000.0),
            ("$(12.5)", -12.5),
            (" -7 ", -7.0),
            ("1e3", 1000.0),
        ],
    )
    def test_values(self, cell, expected):
        assert parse_amount(cell) == expected

    @pytest.mark.parametrize("cell", ["abc", "", "  ", "$", "inf", "nan", "1.2.3"])
    def test_missing(self, cell):
        assert math.isnan(parse_amount(cell))


class TestIngest:
    def test_identical_figures(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", [["66"] + ["96270"] * 7, ["67"] + ["1"] * 7])
        t = ingest_csv(path)
        assert t.headers == ORIGINAL_LETTERS
        assert t.ids == ("66", "67")
        np.testing.assert_array_equal(t.values[0], [96270.0] * 7)

    def test_currency_and_garbage(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", [["x", "$1,234.50", "abc", "(5)", "1", "2", "3", "4"]])
        t = ingest_csv(path)
        assert t.values[0, 0] == 1234.5
        assert math.isnan(t.values[0, 1])
        assert t.values[0, 2] == -5.0

    def test_column_order_follows_letters(self, tmp_path):
        header = list(reversed(HEADER))
        row = ["7", "6", "5", "4", "3", "2", "1", "id1"]
        t = ingest_csv(write_csv(tmp_path / "a.csv", [row], header))
        np.testing.assert_array_equal(t.values[0], [1, 2, 3, 4, 5, 6, 7])

    def test_quoted_fields_and_extra_columns(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(
            ",".join(HEADER + ["note"]) + "\n" + 'k1,"$1,000",2,3,4,5,6,7,"free, text"\n', encoding="utf-8"
        )
        t = ingest_csv(path)
        assert t.values[0, 0] == 1000.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest_csv(tmp_path / "nope.csv")

    def test_missing_header(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", [["1"] * 7], HEADER[:-1])
        with pytest.raises(MissingHeader) as exc:
            ingest_csv(path)
        assert exc.value.name == DEFAULT_HEADERS["G"]

    def test_empty(self, tmp_path):
        with pytest.raises(EmptyTable):
            ingest_csv(write_csv(tmp_path / "a.csv", []))
        (tmp_path / "b.csv").write_text("")
        with pytest.raises(EmptyTable):
            ingest_csv(tmp_path / "b.csv")

    def test_custom_mapping(self, tmp_path):
        mapping = ColumnMapping("award", {k: f"col{k}" for k in ORIGINAL_LETTERS})
        header = ["award"] + [f"col{k}" for k in ORIGINAL_LETTERS]
        t = ingest_csv(write_csv(tmp_path / "a.csv", [["a1"] + list("1234567")], header), mapping)
        assert t.ids == ("a1",)

    def test_mapping_validation(self):
        with pytest.raises(ConfigError):
            ColumnMapping(original={"A": "x"})
        with pytest.raises(ConfigError):
            ColumnMapping(original={k: "same" for k in ORIGINAL_LETTERS})
        with pytest.raises(ConfigError):
            ColumnMapping(derived_formulas={"H": ("A", "H", -1)})


class TestDerived:
    def test_identical_figures_give_zero(self):
        t = compute_derived(table([[96270.0]] * 7, headers=ORIGINAL_LETTERS))
        assert t.headers == ALL_LETTERS
        np.testing.assert_array_equal(t.values[0, 7:], [0.0, 0.0, 0.0])

    def test_arithmetic(self):
        # A=10 B C D=4 E=12 F=7 G=9
        t = compute_derived(table([[10], [0], [0], [4], [12], [7], [9]], headers=ORIGINAL_LETTERS))
        np.testing.assert_array_equal(t.values[0, 7:], [6.0, 2.0, 2.0])

    def test_missing_propagates(self):
        t = compute_derived(table([[np.nan], [0], [0], [4], [12], [7], [9]], headers=ORIGINAL_LETTERS))
        assert math.isnan(t.column("H")[0])
        assert math.isnan(t.column("I")[0])
        assert t.column("J")[0] == 2.0

    def test_override(self):
        m = ColumnMapping(derived_formulas={"H": ("D", "G", -1)})
        t = compute_derived(table([[1], [0], [0], [4], [0], [0], [9]], headers=ORIGINAL_LETTERS), m)
        assert t.headers[-1] == "H"
        assert t.column("H")[0] == -5.0

    @given(
        arrays(np.float64, (5, 7), elements=st.floats(-1e6, 1e6)),
        st.sampled_from([-3.0, -0.5, 0.25, 2.0, 8.0]),
    )
    def test_linearity(self, values, alpha):
        # power-of-two scalars keep the products exact
        t1 = compute_derived(RawTable(tuple("abcde"), ORIGINAL_LETTERS, values))
        t2 = compute_derived(RawTable(tuple("abcde"), ORIGINAL_LETTERS, alpha * values))
        np.testing.assert_allclose(t2.values[:, 7:], alpha * t1.values[:, 7:], rtol=1e-12, atol=1e-6)


class TestImpute:
    def test_mean_fill(self):
        t = impute_mean(table([[1, np.nan, 3]]))
        np.testing.assert_array_equal(t.values[:, 0], [1, 2, 3])

    def test_untouched(self):
        t0 = table([[1.5, 2, 3]])
        np.testing.assert_array_equal(impute_mean(t0).values, t0.values)

    def test_all_missing(self):
        with pytest.raises(AllMissingColumn) as exc:
            impute_mean(table([[1, 2], [np.nan, np.nan]]))
        assert exc.value.name == "B"

    @given(
        st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=30),
        st.lists(st.booleans(), min_size=1, max_size=40),
    )
    def test_mean_preserved(self, observed, holes):
        col = list(map(float, observed))
        for i, h in enumerate(holes):
            if h:
                col.insert(min(i, len(col)), np.nan)
        t = impute_mean(table([col]))
        expected = math.fsum(observed) / len(observed)
        assert math.isclose(math.fsum(t.values[:, 0]) / len(col), expected, rel_tol=1e-12, abs_tol=1e-9)


class TestMinMax:
    @pytest.mark.parametrize(
        "col, expected",
        [([0, 5, 10], [0.0, 0.5, 1.0]), ([3, 3, 3], [0.0, 0.0, 0.0]), ([-2, 0, 2], [0.0, 0.5, 1.0])],
    )
    def test_examples(self, col, expected):
        f = minmax_scale(table([col]))
        np.testing.assert_array_equal(f.values[:, 0], expected)

    def test_non_finite(self):
        with pytest.raises(NonFiniteInput):
            minmax_scale(table([[1, np.nan, 3]]))
        with pytest.raises(NonFiniteInput):
            minmax_scale(table([[1, np.inf, 3]]))

    def test_stats_are_pre_scaling(self):
        f = minmax_scale(table([[0, 5, 10], [-1, -1, -1]]))
        np.testing.assert_array_equal(f.stats, [[0, 10, 5], [-1, -1, -1]])

    @settings(max_examples=60)
    @given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 4)), elements=st.floats(-1e9, 1e9)))
    def test_idempotent_and_order_preserving(self, values):
        t = RawTable(tuple(f"r{i}" for i in range(len(values))), ALL_LETTERS[: values.shape[1]], values)
        once = minmax_scale(t)
        twice = minmax_scale(once.to_table())
        np.testing.assert_array_equal(once.values, twice.values)
        assert once.values.min() >= 0 and once.values.max() <= 1
        for j in range(values.shape[1]):
            order = np.argsort(values[:, j], kind="stable")
            assert np.all(np.diff(once.values[order, j]) >= 0)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        raw = rng.uniform(0, 1, size=(12, 7)) * 10.0 ** np.arange(1, 8)
        rows = [[f"id{i}"] + [repr(float(v)) for v in r] for i, r in enumerate(raw)]
        frame = load_features(write_csv(tmp_path / "a.csv", rows))
        full = compute_derived(RawTable(tuple(r[0] for r in rows), ORIGINAL_LETTERS, raw))
        np.testing.assert_array_equal(frame.stats[:, 0], full.values.min(axis=0))
        np.testing.assert_array_equal(frame.stats[:, 1], full.values.max(axis=0))
        np.testing.assert_array_equal(frame.stats[:, 2], full.values.mean(axis=0))


class TestFeatureFrame:
    def test_immutable(self):
        f = FeatureFrame(("a", "b"), ("A",), [[0.0], [1.0]])
        with pytest.raises(ValueError):
            f.values[0, 0] = 5.0

    def test_duplicate_ids(self):
        with pytest.raises(DuplicateRecordId) as exc:
            FeatureFrame(("a", "b", "a"), ("A",), [[0.0], [1.0], [2.0]])
        assert exc.value.duplicates == ["a"]

    def test_shape_rules(self):
        with pytest.raises(Exception):
            FeatureFrame(("a",), ("A",), [[0.0]])
        with pytest.raises(NonFiniteInput):
            FeatureFrame(("a", "b"), ("A",), [[0.0], [np.nan]])

"""Award-record ingestion and preprocessing.

Pipeline: :func:`ingest_csv` -> :func:`compute_derived` -> :func:`impute_mean`
-> :func:`minmax_scale`. Missing cells are carried as ``NaN`` inside
:class:`RawTable`; a :class:`FeatureFrame` never contains them.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    DataError,
    DuplicateRecordId,
    EmptyTable,
    MissingHeader,
    NonFiniteInput,
)

MISSING = float("nan")

ORIGINAL_LETTERS = ("A", "B", "C", "D", "E", "F", "G")
DERIVED_LETTERS = ("H", "I", "J")
ALL_LETTERS = ORIGINAL_LETTERS + DERIVED_LETTERS

DEFAULT_ID_COLUMN = "contract_award_unique_key"
DEFAULT_HEADERS = {
    "A": "federal_action_obligation",
    "B": "total_dollars_obligated",
    "C": "total_outlayed_amount_for_overall_award",
    "D": "base_and_exercised_options_value",
    "E": "current_total_value_of_award",
    "F": "base_and_all_options_value",
    "G": "potential_total_value_of_award",
}
# letter -> (left operand, right operand, sign): value = left + sign * right
DEFAULT_DERIVED = {
    "H": ("A", "D", -1),
    "I": ("E", "A", -1),
    "J": ("G", "F", -1),
}
DERIVED_NAMES = {
    "H": "net_obligation_difference",
    "I": "value_above_obligation",
    "J": "future_value_potential",
}


@dataclass(frozen=True)
class ColumnMapping:
    """Which CSV headers feed feature letters A-G, and how H-J are derived."""

    id_column: str = DEFAULT_ID_COLUMN
    original: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_HEADERS))
    derived_formulas: Mapping[str, tuple] = field(default_factory=lambda: dict(DEFAULT_DERIVED))

    def __post_init__(self):
        from .errors import ConfigError

        missing = [k for k in ORIGINAL_LETTERS if k not in self.original]
        if missing or set(self.original) - set(ORIGINAL_LETTERS):
            raise ConfigError(f"column mapping must map exactly the letters A-G, got {sorted(self.original)}")
        headers = [self.original[k] for k in ORIGINAL_LETTERS]
        if len(set(headers)) != len(headers):
            raise ConfigError("column mapping assigns the same CSV header to two letters")
        for letter, formula in self.derived_formulas.items():
            if letter not in DERIVED_LETTERS:
                raise ConfigError(f"derived column {letter!r} must be one of H, I, J")
            left, right, sign = formula
            if left not in ORIGINAL_LETTERS or right not in ORIGINAL_LETTERS:
                raise ConfigError(f"derived column {letter} may only reference A-G, got {formula}")
            if sign not in (1, -1):
                raise ConfigError(f"derived column {letter}: sign must be +1 or -1")

    def to_dict(self):
        return {
            "id_column": self.id_column,
            "original": {k: self.original[k] for k in ORIGINAL_LETTERS},
            "derived_formulas": {k: list(v) for k, v in sorted(self.derived_formulas.items())},
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = {}
        if "id_column" in d:
            kwargs["id_column"] = d["id_column"]
        if "original" in d:
            kwargs["original"] = dict(d["original"])
        if "derived_formulas" in d:
            kwargs["derived_formulas"] = {k: tuple(v) for k, v in d["derived_formulas"].items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class RawTable:
    """Record ids plus a numeric grid in which ``NaN`` marks a missing cell."""

    ids: tuple
    headers: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape != (len(self.ids), len(self.headers)):
            raise DataError(
                f"table shape {values.shape} does not match {len(self.ids)} ids x {len(self.headers)} headers"
            )
        if len(set(self.headers)) != len(self.headers):
            raise DataError(f"duplicate headers in {self.headers}")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "headers", tuple(self.headers))
        object.__setattr__(self, "values", values)

    def column(self, name):
        return self.values[:, self.headers.index(name)]

    def select(self, names: Sequence[str]) -> "RawTable":
        missing = [n for n in names if n not in self.headers]
        if missing:
            raise MissingHeader(missing[0])
        idx = [self.headers.index(n) for n in names]
        return RawTable(self.ids, tuple(names), self.values[:, idx])


@dataclass(frozen=True)
class FeatureFrame:
    """Immutable, fully numeric feature matrix.

    ``stats`` has one ``(min, max, mean)`` row per column. When the frame comes
    out of :func:`minmax_scale` these describe the data *before* scaling.
    """

    ids: tuple
    columns: tuple
    values: np.ndarray
    stats: np.ndarray = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        n, p = values.shape
        if n < 2 or p < 1:
            raise DataError(f"feature frame needs at least 2 rows and 1 column, got {n}x{p}")
        if len(self.ids) != n or len(self.columns) != p:
            raise DataError("ids/columns do not match the value matrix")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("feature frame contains missing or non-finite values")
        ids = tuple(str(i) for i in self.ids)
        if any(i == "" for i in ids):
            raise DataError("empty record id")
        if len(set(ids)) != n:
            seen, dup = set(), set()
            for i in ids:
                (dup if i in seen else seen).add(i)
            raise DuplicateRecordId(dup)
        stats = self.stats
        if stats is None:
            stats = column_stats(values)
        stats = np.array(stats, dtype=np.float64, copy=True)
        values.flags.writeable = False
        stats.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stats", stats)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def to_table(self) -> RawTable:
        return RawTable(self.ids, self.columns, self.values)


def column_stats(values):
    values = np.asarray(values, dtype=np.float64)
    return np.column_stack([values.min(axis=0), values.max(axis=0), values.mean(axis=0)])


def parse_amount(cell: str) -> float:
    """Parse a USAspending-style currency cell; unparseable input gives NaN.

    >>> parse_amount("$1,234.50")
    1234.5
    >>> parse_amount("(12)")
    -12.0
    """
    s = cell.strip().replace("$", "").replace(",", "").replace(" ", "")
    negative = False
    if s.startswith("(") and s.endswith(")"):
        negative = True
        s = s[1:-1]
    if not s:
        return MISSING
    try:
        v = float(s)
    except ValueError:
        return MISSING
    if not math.isfinite(v):
        return MISSING
    return -v if negative else v


def ingest_csv(path, mapping: ColumnMapping | None = None) -> RawTable:
    """Read the id column and columns A-G (in letter order) from a CSV extract."""
    mapping = mapping or ColumnMapping()
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyTable(f"{path}: no header row") from None
        wanted = [mapping.id_column] + [mapping.original[k] for k in ORIGINAL_LETTERS]
        for name in wanted:
            if name not in header:
                raise MissingHeader(name)
        id_pos = header.index(mapping.id_column)
        col_pos = [header.index(mapping.original[k]) for k in ORIGINAL_LETTERS]
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            rid = row[id_pos].strip()
            if not rid:
                raise DataError(f"{path}:{lineno}: empty record id")
            ids.append(rid)
            rows.append([parse_amount(row[j]) for j in col_pos])
    if not rows:
        raise EmptyTable(f"{path}: no data rows")
    return RawTable(tuple(ids), ORIGINAL_LETTERS, np.array(rows, dtype=np.float64))


def compute_derived(table: RawTable, mapping: ColumnMapping | None = None) -> RawTable:
    """Append the derived columns H, I, J; a missing operand gives a missing result."""
    mapping = mapping or ColumnMapping()
    new_cols, new_headers = [], []
    for letter in DERIVED_LETTERS:
        if letter not in mapping.derived_formulas:
            continue
        left, right, sign = mapping.derived_formulas[letter]
        if left not in table.headers:
            raise MissingHeader(left)
        if right not in table.headers:
            raise MissingHeader(right)
        # NaN propagates through the arithmetic
        new_cols.append(table.column(left) + sign * table.column(right))
        new_headers.append(letter)
    if not new_cols:
        return table
    values = np.column_stack([table.values] + new_cols)
    return RawTable(table.ids, table.headers + tuple(new_headers), values)


def impute_mean(table: RawTable) -> RawTable:
    """Replace each missing cell by the mean of the observed cells in its column."""
    values = table.values.copy()
    for j, name in enumerate(table.headers):
        col = values[:, j]
        missing = np.isnan(col)
        if missing.all():
            raise AllMissingColumn(name)
        if missing.any():
            col[missing] = col[~missing].mean()
    return RawTable(table.ids, table.headers, values)


def minmax_scale(table: RawTable, ids: Sequence[str] | None = None) -> FeatureFrame:
    """Map every column onto [0, 1] with ``(x - min) / (max - min)``.

    Constant columns become all zeros.
    """
    values = table.values
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("minmax_scale requires a table with no missing or non-finite cells")
    ids = table.ids if ids is None else tuple(ids)
    stats = column_stats(values)
    lo, hi = stats[:, 0], stats[:, 1]
    span = hi - lo
    const = span == 0
    scaled = (values - lo) / np.where(const, 1.0, span)
    scaled[:, const] = 0.0
    return FeatureFrame(ids, table.headers, scaled, stats)


def load_features(path, mapping: ColumnMapping | None = None, letters: Sequence[str] = ALL_LETTERS) -> FeatureFrame:
    """Convenience wrapper running the whole preprocessing chain."""
    mapping = mapping or ColumnMapping()
    table = compute_derived(ingest_csv(path, mapping), mapping)
    table = impute_mean(table.select(list(letters)))
    return minmax_scale(table)

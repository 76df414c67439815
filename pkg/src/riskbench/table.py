"""Columnar dataset with explicit missing masks and CSV round-tripping.

Numerical columns are float64 (NaN mirrors the mask), categorical columns
are object arrays of strings with None at masked cells. Targets are
dense vectors that are never missing. CSV uses RFC-4180 quoting, UTF-8,
and empty fields for missing cells; a sidecar JSON document mirrors the
column kinds so a file can be re-read without inference.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

KIND_NUMERICAL = "numerical"
KIND_CATEGORICAL = "categorical"
TARGET_NAMES = ("mpl_avg_safe", "risk_grq")


@dataclass
class Column:
    name: str
    kind: str
    values: np.ndarray
    mask: np.ndarray  # True = missing

    def __post_init__(self):
        if self.kind not in (KIND_NUMERICAL, KIND_CATEGORICAL):
            raise ValidationError(f"column {self.name}: unknown kind {self.kind!r}")
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.kind == KIND_NUMERICAL:
            self.values = np.asarray(self.values, dtype=np.float64)
        else:
            self.values = np.asarray(self.values, dtype=object)
        if self.values.shape != self.mask.shape:
            raise ValidationError(f"column {self.name}: values/mask length mismatch")

    def copy(self) -> "Column":
        return Column(self.name, self.kind, self.values.copy(), self.mask.copy())


@dataclass
class DataTable:
    columns: list[Column]
    targets: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(c.values) for c in self.columns} | {len(v) for v in self.targets.values()}
        if len(lengths) > 1:
            raise ValidationError(f"ragged table: column lengths {sorted(lengths)}")
        names = [c.name for c in self.columns] + list(self.targets)
        if len(set(names)) != len(names):
            raise ValidationError("duplicate column names")

    @property
    def n_rows(self) -> int:
        if self.columns:
            return len(self.columns[0].values)
        for v in self.targets.values():
            return len(v)
        return 0

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise ValidationError(f"no column named {name!r}")

    def copy(self) -> "DataTable":
        return DataTable(
            [c.copy() for c in self.columns],
            {k: v.copy() for k, v in self.targets.items()},
        )

    def take(self, rows: np.ndarray) -> "DataTable":
        rows = np.asarray(rows)
        return DataTable(
            [Column(c.name, c.kind, c.values[rows], c.mask[rows]) for c in self.columns],
            {k: v[rows] for k, v in self.targets.items()},
        )

    def target(self, name: str) -> np.ndarray:
        if name not in self.targets:
            raise ValidationError(f"table has no target {name!r}; available: {list(self.targets)}")
        return self.targets[name]

    def missing_cells(self) -> int:
        return int(sum(c.mask.sum() for c in self.columns))

    def to_matrix(self) -> np.ndarray:
        """Dense float matrix; requires all-numerical, fully observed columns."""
        for c in self.columns:
            if c.kind != KIND_NUMERICAL:
                raise ValidationError(f"column {c.name} is categorical; encode it first")
            if c.mask.any():
                raise ValidationError(f"column {c.name} still has missing cells; impute first")
        if not self.columns:
            return np.empty((self.n_rows, 0))
        return np.column_stack([c.values for c in self.columns])


def _format_number(v: float) -> str:
    if np.isnan(v):
        return ""
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_csv(table: DataTable, path: str | Path | None = None) -> str:
    """Serialize to CSV text (and optionally a file). Missing cells are empty."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = table.feature_names + list(table.targets)
    writer.writerow(header)
    target_cols = [table.targets[k] for k in table.targets]
    for i in range(table.n_rows):
        row = []
        for c in table.columns:
            if c.mask[i]:
                row.append("")
            elif c.kind == KIND_NUMERICAL:
                row.append(_format_number(c.values[i]))
            else:
                row.append(c.values[i])
        for t in target_cols:
            row.append(_format_number(float(t[i])))
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def schema_sidecar(table: DataTable, missing_rates: Mapping[str, float] | None = None) -> str:
    """JSON document mirroring the column kinds (and rates when known)."""
    doc = {
        "format": "table-schema",
        "version": 1,
        "features": [
            {
                "name": c.name,
                "kind": c.kind,
                **({"missing_rate": missing_rates[c.name]} if missing_rates and c.name in missing_rates else {}),
            }
            for c in table.columns
        ],
        "targets": list(table.targets),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _infer_kind(raw: list[str]) -> str:
    saw_value = False
    for v in raw:
        if v == "":
            continue
        saw_value = True
        try:
            float(v)
        except ValueError:
            return KIND_CATEGORICAL
    return KIND_NUMERICAL if saw_value or not raw else KIND_NUMERICAL


def read_csv(
    source: str | Path,
    kinds: Mapping[str, str] | None = None,
    target_names: Sequence[str] = TARGET_NAMES,
) -> DataTable:
    """Read a CSV produced by write_csv (or compatible).

    Column kinds come from `kinds` when given, otherwise are inferred
    (all non-empty values parse as floats -> numerical). Columns whose
    name is in target_names become targets and must be fully observed.
    """
    if isinstance(source, Path) or "\n" not in str(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValidationError("empty CSV: missing header")
    header, data = rows[0], rows[1:]
    by_col: list[list[str]] = [[r[j] for r in data] for j in range(len(header))]
    columns: list[Column] = []
    targets: dict[str, np.ndarray] = {}
    for name, raw in zip(header, by_col):
        if name in target_names:
            if any(v == "" for v in raw):
                raise ValidationError(f"target {name} has missing values")
            targets[name] = np.array([float(v) for v in raw], dtype=np.float64)
            continue
        kind = (kinds or {}).get(name) or _infer_kind(raw)
        mask = np.array([v == "" for v in raw], dtype=bool)
        if kind == KIND_NUMERICAL:
            values = np.array([float(v) if v != "" else np.nan for v in raw], dtype=np.float64)
        else:
            values = np.array([v if v != "" else None for v in raw], dtype=object)
        columns.append(Column(name, kind, values, mask))
    return DataTable(columns, targets)


def read_schema_kinds(path: str | Path) -> dict[str, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {f["name"]: f["kind"] for f in doc["features"]}


def tables_equal(a: DataTable, b: DataTable) -> bool:
    if a.feature_names != b.feature_names or list(a.targets) != list(b.targets):
        return False
    for ca, cb in zip(a.columns, b.columns):
        if ca.kind != cb.kind or not np.array_equal(ca.mask, cb.mask):
            return False
        if ca.kind == KIND_NUMERICAL:
            ok = np.allclose(ca.values[~ca.mask], cb.values[~cb.mask], rtol=0, atol=0, equal_nan=True)
            if not ok:
                return False
        else:
            if not all(
                (x == y) or (ma and mb)
                for x, y, ma, mb in zip(ca.values, cb.values, ca.mask, cb.mask)
            ):
                return False
    for k in a.targets:
        if not np.array_equal(a.targets[k], b.targets[k]):
            return False
    return True


def concat_rows(parts: Iterable[DataTable]) -> DataTable:
    parts = list(parts)
    if not parts:
        raise ValidationError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.feature_names != first.feature_names or list(p.targets) != list(first.targets):
            raise ValidationError("tables have different layouts")
    cols = [
        Column(
            c.name,
            c.kind,
            np.concatenate([p.columns[i].values for p in parts]),
            np.concatenate([p.columns[i].mask for p in parts]),
        )
        for i, c in enumerate(first.columns)
    ]
    targets = {
        k: np.concatenate([p.targets[k] for p in parts]) for k in first.targets
    }
    return DataTable(cols, targets)

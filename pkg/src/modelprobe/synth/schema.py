"""Table schema: column kinds, domains, and CSV ingestion (RFC-4180, UTF-8)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

from ..errors import ValidationError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass
class Column:
    name: str
    kind: str
    categories: list[str] = field(default_factory=list)  # categorical, sorted
    minimum: float = 0.0
    maximum: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "categories": list(self.categories),
            "minimum": self.minimum,
            "maximum": self.maximum,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Column":
        return cls(
            name=d["name"],
            kind=d["kind"],
            categories=list(d.get("categories", [])),
            minimum=float(d.get("minimum", 0.0)),
            maximum=float(d.get("maximum", 0.0)),
        )


@dataclass
class TableSchema:
    columns: list[Column]

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate column names")
        for c in self.columns:
            if c.kind == NUMERIC and c.minimum > c.maximum:
                raise ValidationError(f"column {c.name}: min > max")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise ValidationError(f"unknown column {name!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"columns": [c.to_dict() for c in self.columns]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TableSchema":
        return cls(columns=[Column.from_dict(c) for c in d["columns"]])


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv_rows(text: str) -> tuple[list[str], list[list[str]]]:
    """First row is the header; ragged rows are a parse error."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty training data") from None
    header = [h.strip() for h in header]
    if not header or any(not h for h in header):
        raise ValidationError("malformed CSV header")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        rows.append(row)
    if not rows:
        raise ValidationError("empty training data")
    return header, rows


def infer_schema(header: list[str], rows: list[list[str]]) -> TableSchema:
    """A column is numeric when every non-empty cell parses as a float."""
    columns = []
    for j, name in enumerate(header):
        cells = [row[j].strip() for row in rows]
        non_empty = [c for c in cells if c != ""]
        if non_empty and all(_is_number(c) for c in non_empty):
            values = [float(c) for c in non_empty]
            columns.append(Column(name=name, kind=NUMERIC, minimum=min(values), maximum=max(values)))
        else:
            columns.append(Column(name=name, kind=CATEGORICAL, categories=sorted(set(cells))))
    return TableSchema(columns=columns)


def parse_rows(schema: TableSchema, raw_rows: list[list[str]]) -> list[dict[str, Any]]:
    out = []
    for row in raw_rows:
        record: dict[str, Any] = {}
        for col, cell in zip(schema.columns, row):
            cell = cell.strip()
            record[col.name] = float(cell) if (col.kind == NUMERIC and cell != "") else cell
        out.append(record)
    return out


def load_table(text: str) -> tuple[TableSchema, list[dict[str, Any]]]:
    header, raw = read_csv_rows(text)
    schema = infer_schema(header, raw)
    return schema, parse_rows(schema, raw)

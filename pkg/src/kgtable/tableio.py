"""Table import/export: CSV, plain JSON, and the annotated JSON format.

The annotated format is a self-describing wrapper around the canonical
table document ({"format": "annotated-table", "version": 1, "table":
...}) and is the only lossless form; its schema ships in-package and
every import is validated against it. CSV follows RFC 4180 with comma
delimiter, UTF-8, and "\n" line endings.
"""

from __future__ import annotations

import csv
import io
import json
import re
from enum import Enum
from importlib import resources
from typing import Any, Optional

import jsonschema

from .errors import EmptyTable, ParseError, UnsupportedFormat, VersionMismatch
from .model import (
    AnnotatedTable,
    Cell,
    Column,
    MatchStatus,
    MATCHED_STATUSES,
    Row,
    derive_cell_status,
)

FORMAT_NAME = "annotated-table"
FORMAT_VERSION = 1


class TableFormat(str, Enum):
    CSV = "csv"
    JSON = "json"
    ANNOTATED_JSON = "annotated-json"

    @staticmethod
    def parse(value: str) -> "TableFormat":
        try:
            return TableFormat(value.lower().replace("_", "-"))
        except ValueError:
            known = ", ".join(f.value for f in TableFormat)
            raise UnsupportedFormat(f"unknown format {value!r} (known: {known})") from None


def slugify(name: str) -> str:
    """Deterministic table id from a display name."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "table"


def _schema() -> dict[str, Any]:
    text = resources.files("kgtable.schema").joinpath("annotated-table.v1.schema.json").read_text("utf-8")
    return json.loads(text)


_SCHEMA_CACHE: Optional[dict[str, Any]] = None
_VALIDATOR: Optional[jsonschema.Draft202012Validator] = None


def annotated_schema() -> dict[str, Any]:
    global _SCHEMA_CACHE
    if _SCHEMA_CACHE is None:
        _SCHEMA_CACHE = _schema()
    return _SCHEMA_CACHE


def _validator() -> jsonschema.Draft202012Validator:
    # Compiled once; validation runs on every store load and import.
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(annotated_schema())
    return _VALIDATOR


def validate_annotated_doc(doc: Any) -> None:
    """Schema-check a wrapper document, raising ParseError on violation."""
    error = jsonschema.exceptions.best_match(_validator().iter_errors(doc))
    if error is not None:
        path = "/".join(str(p) for p in error.absolute_path) or "(root)"
        raise ParseError(f"annotated table document invalid at {path}: {error.message}", location=path)


# ---- import ----

def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"payload is not valid UTF-8: {exc}") from None


def _fresh_table(table_id: str, name: str, headers: list[str], rows: list[list[str]]) -> AnnotatedTable:
    columns = [Column(column_id=f"c{i}", header=h) for i, h in enumerate(headers)]
    table_rows = [
        Row(row_id=f"r{i}", cells=[Cell(label=v) for v in values]) for i, values in enumerate(rows)
    ]
    return AnnotatedTable(
        table_id=table_id,
        name=name,
        columns=columns,
        rows=table_rows,
        next_row_seq=len(table_rows),
        next_col_seq=len(columns),
    )


def _import_csv(text: str, name: str) -> AnnotatedTable:
    try:
        records = list(csv.reader(io.StringIO(text, newline="")))
    except csv.Error as exc:
        raise ParseError(f"CSV parse failed: {exc}") from None
    if not records or not records[0]:
        raise EmptyTable("CSV payload has no header row")
    headers = records[0]
    rows = []
    for lineno, record in enumerate(records[1:], start=2):
        if not record:
            continue  # ignore blank lines
        if len(record) > len(headers):
            raise ParseError(
                f"row {lineno} has {len(record)} fields, header has {len(headers)}", row=lineno
            )
        rows.append(record + [""] * (len(headers) - len(record)))
    return _fresh_table(slugify(name), name, headers, rows)


def _scalar_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    return json.dumps(value, ensure_ascii=False)


def _import_json(text: str, name: str) -> AnnotatedTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"JSON parse failed at line {exc.lineno}: {exc.msg}", row=exc.lineno) from None
    if isinstance(doc, list):
        headers: list[str] = []
        for entry in doc:
            if not isinstance(entry, dict):
                raise ParseError("JSON array import expects one object per row")
            for key in entry:
                if key not in headers:
                    headers.append(key)
        if not headers:
            raise EmptyTable("JSON payload defines no columns")
        rows = [[_scalar_text(entry.get(h)) for h in headers] for entry in doc]
        return _fresh_table(slugify(name), name, headers, rows)
    if isinstance(doc, dict) and isinstance(doc.get("columns"), list):
        headers = [str(h) for h in doc["columns"]]
        if not headers:
            raise EmptyTable("JSON payload defines no columns")
        rows = []
        for i, record in enumerate(doc.get("rows", [])):
            if not isinstance(record, list):
                raise ParseError(f"JSON row {i} is not an array", row=i)
            if len(record) > len(headers):
                raise ParseError(f"JSON row {i} is wider than the column list", row=i)
            rows.append([_scalar_text(v) for v in record] + [""] * (len(headers) - len(record)))
        return _fresh_table(slugify(name), name, headers, rows)
    raise ParseError("JSON import expects an array of objects or {columns, rows}")


def normalize_loaded(table: AnnotatedTable) -> AnnotatedTable:
    """In-flight statuses do not survive persistence; recompute them."""
    for _row, _col, cell in table.iter_cells():
        if cell.status is MatchStatus.PENDING:
            cell.status = derive_cell_status(cell.candidates)
    return table


def _import_annotated(text: str, name: Optional[str]) -> AnnotatedTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"JSON parse failed at line {exc.lineno}: {exc.msg}", row=exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ParseError(f"not an {FORMAT_NAME} document (missing format marker)")
    version = doc.get("version")
    if not isinstance(version, int):
        raise ParseError("document version missing or not an integer")
    if version > FORMAT_VERSION:
        raise VersionMismatch(
            f"document version {version} is newer than supported version {FORMAT_VERSION}",
            found=version,
            supported=FORMAT_VERSION,
        )
    validate_annotated_doc(doc)
    table = AnnotatedTable.from_doc(doc["table"])
    if name:
        table.name = name
        table.table_id = slugify(name)
    return normalize_loaded(table)


def import_table(data: bytes, table_format: TableFormat | str, name: Optional[str] = None) -> AnnotatedTable:
    """Parse an uploaded payload into a fresh table.

    CSV and plain JSON produce unannotated tables; the annotated format
    restores candidates, statuses, and column annotations. ``name`` is
    required for CSV/JSON and optional for the annotated format (which
    embeds one).
    """
    fmt = TableFormat.parse(table_format) if isinstance(table_format, str) else table_format
    text = _decode(data)
    if fmt is TableFormat.CSV:
        return _import_csv(text, name or "table")
    if fmt is TableFormat.JSON:
        return _import_json(text, name or "table")
    return _import_annotated(text, name)


# ---- export ----

def canonical_json(doc: Any) -> bytes:
    """The one JSON serialization used for every export and store write."""
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def export_annotated(table: AnnotatedTable) -> bytes:
    doc = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "table": table.to_doc()}
    return canonical_json(doc)


def export_csv(table: AnnotatedTable) -> bytes:
    """Labels plus an adjacent ``<header>_id`` column per linked column.

    A column earns an id column iff at least one of its cells is
    matched; the id value is the matched entity URI (falling back to
    the bare entity id), empty for unmatched rows.
    """
    col_count = len(table.columns)
    linked = [False] * col_count
    for row in table.rows:
        for i, cell in enumerate(row.cells):
            if cell.status in MATCHED_STATUSES and cell.matched_candidate() is not None:
                linked[i] = True

    header: list[str] = []
    for i, col in enumerate(table.columns):
        header.append(col.header)
        if linked[i]:
            header.append(f"{col.header}_id")

    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in table.rows:
        record: list[str] = []
        for i, cell in enumerate(row.cells):
            record.append(cell.label)
            if linked[i]:
                matched = cell.matched_candidate() if cell.status in MATCHED_STATUSES else None
                record.append((matched.uri or matched.entity_id) if matched else "")
        writer.writerow(record)
    return buffer.getvalue().encode("utf-8")


def export_table(table: AnnotatedTable, table_format: TableFormat | str) -> bytes:
    fmt = TableFormat.parse(table_format) if isinstance(table_format, str) else table_format
    if fmt is TableFormat.CSV:
        return export_csv(table)
    if fmt is TableFormat.ANNOTATED_JSON:
        return export_annotated(table)
    raise UnsupportedFormat("plain JSON is an import format; export as csv or annotated-json")

"""Annotated-table data model.

Tables are rows x columns of cells; every cell carries the candidate
entities proposed for it by reconciliation services plus a five-state
match status. Columns can carry a type annotation (KG classes), binary
relations to other columns, and a subject-column marker. The canonical
dict form produced by ``to_doc`` methods doubles as the on-disk JSON
shape (see ``tableio``) and as the deep-equality representation used by
the test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Iterator, Optional

from . import clock
from .errors import UnknownCell, UnknownColumn


class MatchStatus(str, Enum):
    """Per-cell (and per-column) annotation state.

    NONE            no candidates attached
    PENDING         a reconciliation request is in flight
    MATCHED_AUTO    a service or refinement rule picked the match
    MATCHED_MANUAL  the user picked the match
    AMBIGUOUS       candidates exist but none is marked as the match
    """

    NONE = "NONE"
    PENDING = "PENDING"
    MATCHED_AUTO = "MATCHED_AUTO"
    MATCHED_MANUAL = "MATCHED_MANUAL"
    AMBIGUOUS = "AMBIGUOUS"


MATCHED_STATUSES = frozenset({MatchStatus.MATCHED_AUTO, MatchStatus.MATCHED_MANUAL})


class ColumnRole(str, Enum):
    SUBJECT = "SUBJECT"
    ATTRIBUTE = "ATTRIBUTE"
    NONE = "NONE"


@dataclass
class EntityType:
    """A KG class reference attached to a candidate."""

    type_id: str
    name: str

    def to_doc(self) -> dict[str, Any]:
        return {"id": self.type_id, "name": self.name}

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "EntityType":
        return cls(type_id=str(doc["id"]), name=str(doc.get("name", "")))


@dataclass
class Candidate:
    """One KG entity proposed for a cell or column.

    ``score`` is kept in the producing service's own scale; no
    renormalization happens anywhere in the package. ``uri`` is the
    resolved KG resource (identifier space + entity id), filled in when
    reconciliation results are applied.
    """

    entity_id: str
    name: str
    score: float
    match: bool = False
    types: list[EntityType] = field(default_factory=list)
    description: Optional[str] = None
    uri: Optional[str] = None

    def sort_key(self) -> tuple[float, str]:
        # Descending score, ties broken by ascending entity id.
        return (-self.score, self.entity_id)

    def to_doc(self) -> dict[str, Any]:
        # W3C reconciliation candidate shape: id, name, score, match, type.
        return {
            "id": self.entity_id,
            "name": self.name,
            "score": self.score,
            "match": self.match,
            "type": [t.to_doc() for t in self.types],
            "description": self.description,
            "uri": self.uri,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Candidate":
        return cls(
            entity_id=str(doc["id"]),
            name=str(doc.get("name", "")),
            score=float(doc["score"]),
            match=bool(doc.get("match", False)),
            types=[EntityType.from_doc(t) for t in doc.get("type", [])],
            description=doc.get("description"),
            uri=doc.get("uri"),
        )


def sort_candidates(candidates: list[Candidate]) -> list[Candidate]:
    """Total candidate order: score descending, then entity id ascending."""
    return sorted(candidates, key=Candidate.sort_key)


def derive_cell_status(candidates: list[Candidate], manual: bool = False) -> MatchStatus:
    """Status implied by the match flags of a candidate list."""
    matches = sum(1 for c in candidates if c.match)
    if matches == 1:
        return MatchStatus.MATCHED_MANUAL if manual else MatchStatus.MATCHED_AUTO
    if candidates:
        return MatchStatus.AMBIGUOUS
    return MatchStatus.NONE


@dataclass
class Cell:
    """A single table cell: its text label plus annotation state.

    ``meta`` holds provenance that is not part of the annotation proper,
    e.g. the full value list behind an extension-filled cell.
    """

    label: str
    candidates: list[Candidate] = field(default_factory=list)
    status: MatchStatus = MatchStatus.NONE
    meta: dict[str, Any] = field(default_factory=dict)

    def matched_candidate(self) -> Optional[Candidate]:
        for c in self.candidates:
            if c.match:
                return c
        return None

    def find_candidate(self, entity_id: str) -> Optional[Candidate]:
        for c in self.candidates:
            if c.entity_id == entity_id:
                return c
        return None

    def to_doc(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "status": self.status.value,
            "candidates": [c.to_doc() for c in self.candidates],
            "meta": self.meta,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Cell":
        return cls(
            label=str(doc["label"]),
            candidates=[Candidate.from_doc(c) for c in doc.get("candidates", [])],
            status=MatchStatus(doc.get("status", "NONE")),
            meta=dict(doc.get("meta", {})),
        )


@dataclass
class PropertyAnnotation:
    """A binary relation from the annotated column to another column."""

    property_id: str
    property_name: str
    target_column_id: str
    score: float = 1.0
    match: bool = True

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.property_id,
            "name": self.property_name,
            "targetColumnId": self.target_column_id,
            "score": self.score,
            "match": self.match,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "PropertyAnnotation":
        return cls(
            property_id=str(doc["id"]),
            property_name=str(doc.get("name", "")),
            target_column_id=str(doc["targetColumnId"]),
            score=float(doc.get("score", 1.0)),
            match=bool(doc.get("match", True)),
        )


@dataclass
class ColumnAnnotation:
    """Schema-level annotation: KG type candidates plus column relations."""

    type_candidates: list[Candidate] = field(default_factory=list)
    properties: list[PropertyAnnotation] = field(default_factory=list)
    status: MatchStatus = MatchStatus.NONE

    def to_doc(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "types": [c.to_doc() for c in self.type_candidates],
            "properties": [p.to_doc() for p in self.properties],
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "ColumnAnnotation":
        return cls(
            type_candidates=[Candidate.from_doc(c) for c in doc.get("types", [])],
            properties=[PropertyAnnotation.from_doc(p) for p in doc.get("properties", [])],
            status=MatchStatus(doc.get("status", "NONE")),
        )


@dataclass
class Column:
    column_id: str
    header: str
    annotation: Optional[ColumnAnnotation] = None
    role: ColumnRole = ColumnRole.NONE
    provenance: Optional[dict[str, Any]] = None

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.column_id,
            "header": self.header,
            "role": self.role.value,
            "annotation": self.annotation.to_doc() if self.annotation else None,
            "provenance": self.provenance,
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Column":
        annotation = doc.get("annotation")
        return cls(
            column_id=str(doc["id"]),
            header=str(doc["header"]),
            annotation=ColumnAnnotation.from_doc(annotation) if annotation else None,
            role=ColumnRole(doc.get("role", "NONE")),
            provenance=doc.get("provenance"),
        )


@dataclass
class Row:
    row_id: str
    cells: list[Cell] = field(default_factory=list)

    def to_doc(self) -> dict[str, Any]:
        return {"id": self.row_id, "cells": [c.to_doc() for c in self.cells]}

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "Row":
        return cls(row_id=str(doc["id"]), cells=[Cell.from_doc(c) for c in doc.get("cells", [])])


def cell_id_for(row_id: str, column_id: str) -> str:
    """Cell ids are derived, stable, and unique: ``<rowId>:<columnId>``."""
    return f"{row_id}:{column_id}"


@dataclass
class TableStats:
    n_rows: int
    n_cols: int
    last_modified: datetime
    status_counts: dict[MatchStatus, int]

    def to_doc(self) -> dict[str, Any]:
        return {
            "nRows": self.n_rows,
            "nCols": self.n_cols,
            "lastModified": clock.format_timestamp(self.last_modified),
            "statusCounts": {s.value: self.status_counts.get(s, 0) for s in MatchStatus},
        }


@dataclass
class AnnotatedTable:
    """The full mutable table: structure, annotations, and edit history.

    Mutations must go through the operation modules (``edits``,
    ``annotate``, ``refine``, ``extend``) so that every change lands on
    the undo stack and ``last_modified`` stays monotonic. Row/column ids
    are never reused: ``next_row_seq``/``next_col_seq`` only grow.
    """

    table_id: str
    name: str
    columns: list[Column] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    last_modified: datetime = field(default_factory=clock.now)
    history: "OperationLog" = None  # type: ignore[assignment]
    next_row_seq: int = 0
    next_col_seq: int = 0

    def __post_init__(self):
        if self.history is None:
            from .history import OperationLog

            self.history = OperationLog()

    # -- lookups --

    def column_index(self, column_id: str) -> int:
        for i, col in enumerate(self.columns):
            if col.column_id == column_id:
                return i
        raise UnknownColumn(f"no column with id {column_id!r}", columnId=column_id)

    def get_column(self, column_id: str) -> Column:
        return self.columns[self.column_index(column_id)]

    def row_index(self, row_id: str) -> int:
        for i, row in enumerate(self.rows):
            if row.row_id == row_id:
                return i
        raise UnknownCell(f"no row with id {row_id!r}", rowId=row_id)

    def find_cell(self, cell_id: str) -> Cell:
        row_id, _, column_id = cell_id.partition(":")
        try:
            return self.rows[self.row_index(row_id)].cells[self.column_index(column_id)]
        except (UnknownCell, UnknownColumn):
            raise UnknownCell(f"no cell with id {cell_id!r}", cellId=cell_id) from None

    def iter_cells(self) -> Iterator[tuple[Row, Column, Cell]]:
        for row in self.rows:
            for col, cell in zip(self.columns, row.cells):
                yield row, col, cell

    def column_cells(self, column_id: str) -> list[tuple[str, Cell]]:
        """(cellId, cell) pairs for one column, in row order."""
        idx = self.column_index(column_id)
        col = self.columns[idx]
        return [(cell_id_for(row.row_id, col.column_id), row.cells[idx]) for row in self.rows]

    def subject_column(self) -> Optional[Column]:
        for col in self.columns:
            if col.role is ColumnRole.SUBJECT:
                return col
        return None

    # -- id allocation --

    def new_row_id(self) -> str:
        rid = f"r{self.next_row_seq}"
        self.next_row_seq += 1
        return rid

    def new_column_id(self) -> str:
        cid = f"c{self.next_col_seq}"
        self.next_col_seq += 1
        return cid

    def touch(self) -> None:
        # Monotonically non-decreasing even if the wall clock steps back.
        candidate = clock.now()
        if candidate > self.last_modified:
            self.last_modified = candidate

    def to_doc(self) -> dict[str, Any]:
        """Canonical dict form; excludes the operation history."""
        return {
            "id": self.table_id,
            "name": self.name,
            "lastModified": clock.format_timestamp(self.last_modified),
            "nextRowSeq": self.next_row_seq,
            "nextColSeq": self.next_col_seq,
            "columns": [c.to_doc() for c in self.columns],
            "rows": [r.to_doc() for r in self.rows],
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "AnnotatedTable":
        return cls(
            table_id=str(doc["id"]),
            name=str(doc["name"]),
            columns=[Column.from_doc(c) for c in doc.get("columns", [])],
            rows=[Row.from_doc(r) for r in doc.get("rows", [])],
            last_modified=clock.parse_timestamp(doc["lastModified"]),
            next_row_seq=int(doc.get("nextRowSeq", 0)),
            next_col_seq=int(doc.get("nextColSeq", 0)),
        )


def table_stats(table: AnnotatedTable) -> TableStats:
    """Row/column counts plus how many cells sit in each match status."""
    counts = {status: 0 for status in MatchStatus}
    for _row, _col, cell in table.iter_cells():
        counts[cell.status] += 1
    return TableStats(
        n_rows=len(table.rows),
        n_cols=len(table.columns),
        last_modified=table.last_modified,
        status_counts=counts,
    )


def validate_table(table: AnnotatedTable) -> list[str]:
    """Check every structural and annotation invariant; return violations.

    Empty list means the table is well formed. Property tests run this
    after every operation sequence.
    """
    problems: list[str] = []
    col_ids = [c.column_id for c in table.columns]
    if len(set(col_ids)) != len(col_ids):
        problems.append("duplicate column ids")
    row_ids = [r.row_id for r in table.rows]
    if len(set(row_ids)) != len(row_ids):
        problems.append("duplicate row ids")
    if sum(1 for c in table.columns if c.role is ColumnRole.SUBJECT) > 1:
        problems.append("more than one SUBJECT column")

    for row in table.rows:
        if len(row.cells) != len(table.columns):
            problems.append(f"row {row.row_id} has {len(row.cells)} cells, expected {len(table.columns)}")

    for row, col, cell in table.iter_cells():
        where = cell_id_for(row.row_id, col.column_id)
        keys = [c.sort_key() for c in cell.candidates]
        if keys != sorted(keys):
            problems.append(f"cell {where}: candidates not in canonical order")
        matches = sum(1 for c in cell.candidates if c.match)
        if matches > 1:
            problems.append(f"cell {where}: {matches} candidates flagged match")
        if (cell.status in MATCHED_STATUSES) != (matches == 1):
            problems.append(f"cell {where}: status {cell.status.value} inconsistent with {matches} matches")
        if cell.status is MatchStatus.AMBIGUOUS and (not cell.candidates or matches):
            problems.append(f"cell {where}: AMBIGUOUS requires candidates and no match")
        if cell.status is MatchStatus.NONE and cell.candidates:
            problems.append(f"cell {where}: NONE with candidates attached")
        for c in cell.candidates:
            if not c.entity_id:
                problems.append(f"cell {where}: candidate with empty entity id")
            if not math.isfinite(c.score):
                problems.append(f"cell {where}: candidate {c.entity_id} has non-finite score")

    valid_cols = set(col_ids)
    for col in table.columns:
        ann = col.annotation
        if ann is None:
            continue
        keys = [c.sort_key() for c in ann.type_candidates]
        if keys != sorted(keys):
            problems.append(f"column {col.column_id}: type candidates not in canonical order")
        if sum(1 for c in ann.type_candidates if c.match) > 1:
            problems.append(f"column {col.column_id}: multiple matched type candidates")
        for prop in ann.properties:
            if prop.target_column_id == col.column_id:
                problems.append(f"column {col.column_id}: property {prop.property_id} is a self-loop")
            elif prop.target_column_id not in valid_cols:
                problems.append(
                    f"column {col.column_id}: property {prop.property_id} targets "
                    f"missing column {prop.target_column_id}"
                )
            if not 0.0 <= prop.score <= 1.0:
                problems.append(f"column {col.column_id}: property {prop.property_id} score outside [0,1]")
    return problems

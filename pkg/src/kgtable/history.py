"""Reversible operations and the per-table undo/redo log.

Every mutation an operation module performs is recorded as a diff-style
op holding the exact before/after state of whatever it touched, so
``revert`` and ``apply`` are deterministic replays that never hit the
network. Ops serialize to plain dicts, which lets the engine keep a
history sidecar next to the stored table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .errors import EmptyHistory
from .model import (
    AnnotatedTable,
    Cell,
    Column,
    ColumnAnnotation,
    ColumnRole,
    PropertyAnnotation,
    Row,
)

DEFAULT_CAPACITY = 100


def snapshot_cells(table: AnnotatedTable, cell_ids: list[str]) -> dict[str, dict]:
    return {cid: table.find_cell(cid).to_doc() for cid in cell_ids}


def _assign_cell(cell: Cell, doc: dict) -> None:
    src = Cell.from_doc(doc)
    cell.label = src.label
    cell.candidates = src.candidates
    cell.status = src.status
    cell.meta = src.meta


class ReversibleOp:
    """Base class; subclasses define symmetric apply/revert replays."""

    kind = "op"  # deliberately unannotated so dataclass subclasses ignore it

    def apply(self, table: AnnotatedTable) -> None:
        raise NotImplementedError

    def revert(self, table: AnnotatedTable) -> None:
        raise NotImplementedError

    def to_doc(self) -> dict[str, Any]:
        raise NotImplementedError

    @staticmethod
    def from_doc(doc: dict[str, Any]) -> "ReversibleOp":
        op_cls = _OP_TYPES[doc["op"]]
        return op_cls._from_doc(doc)


@dataclass
class CellEditOp(ReversibleOp):
    """Before/after snapshots for a set of cells, one undo unit.

    Covers cell renames, match selection, manual candidates, column-wide
    reconciliation application, and both refinement strategies: they all
    only change cell contents.
    """

    kind: str = "cells"
    changes: dict[str, dict[str, dict]] = field(default_factory=dict)  # cell_id -> {before, after} docs

    def apply(self, table: AnnotatedTable) -> None:
        for cell_id, pair in self.changes.items():
            _assign_cell(table.find_cell(cell_id), pair["after"])

    def revert(self, table: AnnotatedTable) -> None:
        for cell_id, pair in self.changes.items():
            _assign_cell(table.find_cell(cell_id), pair["before"])

    def to_doc(self) -> dict[str, Any]:
        return {"op": "cells", "kind": self.kind, "changes": self.changes}

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "CellEditOp":
        return cls(kind=doc["kind"], changes=doc["changes"])


@dataclass
class RenameHeaderOp(ReversibleOp):
    kind = "rename-header"
    column_id: str
    before: str
    after: str

    def apply(self, table: AnnotatedTable) -> None:
        table.get_column(self.column_id).header = self.after

    def revert(self, table: AnnotatedTable) -> None:
        table.get_column(self.column_id).header = self.before

    def to_doc(self) -> dict[str, Any]:
        return {"op": "rename-header", "columnId": self.column_id, "before": self.before, "after": self.after}

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "RenameHeaderOp":
        return cls(column_id=doc["columnId"], before=doc["before"], after=doc["after"])


@dataclass
class DeleteRowOp(ReversibleOp):
    kind = "delete-row"
    row_index: int
    row_doc: dict[str, Any]

    def apply(self, table: AnnotatedTable) -> None:
        row_id = self.row_doc["id"]
        table.rows.pop(table.row_index(row_id))

    def revert(self, table: AnnotatedTable) -> None:
        table.rows.insert(self.row_index, Row.from_doc(self.row_doc))

    def to_doc(self) -> dict[str, Any]:
        return {"op": "delete-row", "index": self.row_index, "row": self.row_doc}

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "DeleteRowOp":
        return cls(row_index=doc["index"], row_doc=doc["row"])


@dataclass
class DeleteColumnOp(ReversibleOp):
    """Removes one column, its cells, and any relations pointing at it.

    ``dropped_properties`` remembers, per other column, the (position,
    doc) of each property annotation that targeted the deleted column so
    revert can put them back exactly where they were.
    """

    kind = "delete-column"
    column_index: int
    column_doc: dict[str, Any]
    cells: dict[str, dict[str, Any]]  # row_id -> cell doc
    dropped_properties: dict[str, list[tuple[int, dict[str, Any]]]] = field(default_factory=dict)

    def apply(self, table: AnnotatedTable) -> None:
        doomed = self.column_doc["id"]
        idx = table.column_index(doomed)
        table.columns.pop(idx)
        for row in table.rows:
            row.cells.pop(idx)
        for col in table.columns:
            if col.annotation:
                col.annotation.properties = [
                    p for p in col.annotation.properties if p.target_column_id != doomed
                ]

    def revert(self, table: AnnotatedTable) -> None:
        table.columns.insert(self.column_index, Column.from_doc(self.column_doc))
        for row in table.rows:
            row.cells.insert(self.column_index, Cell.from_doc(self.cells[row.row_id]))
        for col_id, entries in self.dropped_properties.items():
            col = table.get_column(col_id)
            if col.annotation is None:
                col.annotation = ColumnAnnotation()
            for pos, prop_doc in sorted(entries, key=lambda e: e[0]):
                col.annotation.properties.insert(pos, PropertyAnnotation.from_doc(prop_doc))

    def to_doc(self) -> dict[str, Any]:
        return {
            "op": "delete-column",
            "index": self.column_index,
            "column": self.column_doc,
            "cells": self.cells,
            "droppedProperties": {k: [[i, d] for i, d in v] for k, v in self.dropped_properties.items()},
        }

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "DeleteColumnOp":
        return cls(
            column_index=doc["index"],
            column_doc=doc["column"],
            cells=doc["cells"],
            dropped_properties={k: [(i, d) for i, d in v] for k, v in doc.get("droppedProperties", {}).items()},
        )


@dataclass
class ColumnAnnotationOp(ReversibleOp):
    """Annotation + role change on a single column."""

    kind = "annotate-column"
    column_id: str
    before: dict[str, Any]  # {"annotation": doc|None, "role": str}
    after: dict[str, Any]

    def _set(self, table: AnnotatedTable, state: dict[str, Any]) -> None:
        col = table.get_column(self.column_id)
        ann = state.get("annotation")
        col.annotation = ColumnAnnotation.from_doc(ann) if ann else None
        col.role = ColumnRole(state["role"])

    def apply(self, table: AnnotatedTable) -> None:
        self._set(table, self.after)

    def revert(self, table: AnnotatedTable) -> None:
        self._set(table, self.before)

    def to_doc(self) -> dict[str, Any]:
        return {"op": "annotate-column", "columnId": self.column_id, "before": self.before, "after": self.after}

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "ColumnAnnotationOp":
        return cls(column_id=doc["columnId"], before=doc["before"], after=doc["after"])


@dataclass
class ExtendOp(ReversibleOp):
    """Columns appended by one extension call, plus the CPA it recorded."""

    kind = "extend"
    source_column_id: str
    inserted: list[dict[str, Any]]  # [{"index", "column": doc, "cells": {row_id: doc}}]
    source_before: dict[str, Any]
    source_after: dict[str, Any]
    next_col_seq_before: int = 0
    next_col_seq_after: int = 0

    def apply(self, table: AnnotatedTable) -> None:
        for entry in self.inserted:
            idx = entry["index"]
            table.columns.insert(idx, Column.from_doc(entry["column"]))
            for row in table.rows:
                row.cells.insert(idx, Cell.from_doc(entry["cells"][row.row_id]))
        ColumnAnnotationOp(self.source_column_id, self.source_before, self.source_after).apply(table)
        table.next_col_seq = self.next_col_seq_after

    def revert(self, table: AnnotatedTable) -> None:
        for entry in reversed(self.inserted):
            idx = table.column_index(entry["column"]["id"])
            table.columns.pop(idx)
            for row in table.rows:
                row.cells.pop(idx)
        ColumnAnnotationOp(self.source_column_id, self.source_before, self.source_after).revert(table)
        table.next_col_seq = self.next_col_seq_before

    def to_doc(self) -> dict[str, Any]:
        return {
            "op": "extend",
            "sourceColumnId": self.source_column_id,
            "inserted": self.inserted,
            "sourceBefore": self.source_before,
            "sourceAfter": self.source_after,
            "nextColSeqBefore": self.next_col_seq_before,
            "nextColSeqAfter": self.next_col_seq_after,
        }

    @classmethod
    def _from_doc(cls, doc: dict[str, Any]) -> "ExtendOp":
        return cls(
            source_column_id=doc["sourceColumnId"],
            inserted=doc["inserted"],
            source_before=doc["sourceBefore"],
            source_after=doc["sourceAfter"],
            next_col_seq_before=doc.get("nextColSeqBefore", 0),
            next_col_seq_after=doc.get("nextColSeqAfter", 0),
        )


_OP_TYPES: dict[str, type] = {
    "cells": CellEditOp,
    "rename-header": RenameHeaderOp,
    "delete-row": DeleteRowOp,
    "delete-column": DeleteColumnOp,
    "annotate-column": ColumnAnnotationOp,
    "extend": ExtendOp,
}


@dataclass
class OperationLog:
    """Bounded undo/redo stacks. Recording anything clears the redo side."""

    undo_stack: list[ReversibleOp] = field(default_factory=list)
    redo_stack: list[ReversibleOp] = field(default_factory=list)
    capacity: int = DEFAULT_CAPACITY

    def record(self, op: ReversibleOp) -> None:
        self.undo_stack.append(op)
        self.redo_stack.clear()
        if len(self.undo_stack) > self.capacity:
            del self.undo_stack[: len(self.undo_stack) - self.capacity]

    def clear(self) -> None:
        self.undo_stack.clear()
        self.redo_stack.clear()

    def to_doc(self) -> dict[str, Any]:
        return {
            "capacity": self.capacity,
            "undo": [op.to_doc() for op in self.undo_stack],
            "redo": [op.to_doc() for op in self.redo_stack],
        }

    @classmethod
    def from_doc(cls, doc: dict[str, Any]) -> "OperationLog":
        return cls(
            undo_stack=[ReversibleOp.from_doc(d) for d in doc.get("undo", [])],
            redo_stack=[ReversibleOp.from_doc(d) for d in doc.get("redo", [])],
            capacity=int(doc.get("capacity", DEFAULT_CAPACITY)),
        )


def record_and_touch(table: AnnotatedTable, op: ReversibleOp) -> None:
    table.history.record(op)
    table.touch()


def undo(table: AnnotatedTable) -> AnnotatedTable:
    """Reverse the most recent operation; it becomes redoable."""
    if not table.history.undo_stack:
        raise EmptyHistory("nothing to undo", tableId=table.table_id)
    op = table.history.undo_stack.pop()
    op.revert(table)
    table.history.redo_stack.append(op)
    table.touch()
    return table


def redo(table: AnnotatedTable) -> AnnotatedTable:
    """Re-apply the most recently undone operation."""
    if not table.history.redo_stack:
        raise EmptyHistory("nothing to redo", tableId=table.table_id)
    op = table.history.redo_stack.pop()
    op.apply(table)
    table.history.undo_stack.append(op)
    table.touch()
    return table

"""Basic structural edits: cell rename, row/column delete, header rename.

Every edit is one undo unit. Renaming a cell invalidates its annotation
(candidates are derived from the label, so they are cleared and the
status drops back to NONE).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import InvalidEdit, UnknownCell, UnknownColumn, UnknownTarget
from .history import CellEditOp, DeleteColumnOp, DeleteRowOp, RenameHeaderOp, record_and_touch
from .model import AnnotatedTable, MatchStatus


@dataclass
class RenameCell:
    cell_id: str
    new_label: str


@dataclass
class DeleteRow:
    row_id: str


@dataclass
class DeleteColumn:
    column_id: str


@dataclass
class RenameHeader:
    column_id: str
    new_header: str


Edit = Union[RenameCell, DeleteRow, DeleteColumn, RenameHeader]

EDIT_KINDS = {
    "RenameCell": RenameCell,
    "DeleteRow": DeleteRow,
    "DeleteColumn": DeleteColumn,
    "RenameHeader": RenameHeader,
}


def edit_from_doc(doc: dict) -> Edit:
    """Build an edit from its wire form: {"kind": ..., other fields}."""
    kind = doc.get("kind")
    if kind == "RenameCell":
        return RenameCell(cell_id=doc["cellId"], new_label=doc["newLabel"])
    if kind == "DeleteRow":
        return DeleteRow(row_id=doc["rowId"])
    if kind == "DeleteColumn":
        return DeleteColumn(column_id=doc["columnId"])
    if kind == "RenameHeader":
        return RenameHeader(column_id=doc["columnId"], new_header=doc["newHeader"])
    raise InvalidEdit(f"unknown edit kind {kind!r}", kind=kind)


def apply_edit(table: AnnotatedTable, edit: Edit) -> AnnotatedTable:
    """Apply one structural edit; pushes its inverse onto the undo stack."""
    if isinstance(edit, RenameCell):
        _rename_cell(table, edit)
    elif isinstance(edit, DeleteRow):
        _delete_row(table, edit)
    elif isinstance(edit, DeleteColumn):
        _delete_column(table, edit)
    elif isinstance(edit, RenameHeader):
        _rename_header(table, edit)
    else:
        raise InvalidEdit(f"unsupported edit {type(edit).__name__}")
    return table


def _rename_cell(table: AnnotatedTable, edit: RenameCell) -> None:
    try:
        cell = table.find_cell(edit.cell_id)
    except UnknownCell:
        raise UnknownTarget(f"no cell with id {edit.cell_id!r}", cellId=edit.cell_id) from None
    before = cell.to_doc()
    after = dict(before)
    after.update(label=edit.new_label, candidates=[], status=MatchStatus.NONE.value, meta={})
    op = CellEditOp(kind="rename-cell", changes={edit.cell_id: {"before": before, "after": after}})
    op.apply(table)
    record_and_touch(table, op)


def _delete_row(table: AnnotatedTable, edit: DeleteRow) -> None:
    try:
        idx = table.row_index(edit.row_id)
    except UnknownCell:
        raise UnknownTarget(f"no row with id {edit.row_id!r}", rowId=edit.row_id) from None
    op = DeleteRowOp(row_index=idx, row_doc=table.rows[idx].to_doc())
    op.apply(table)
    record_and_touch(table, op)


def _delete_column(table: AnnotatedTable, edit: DeleteColumn) -> None:
    try:
        idx = table.column_index(edit.column_id)
    except UnknownColumn:
        raise UnknownTarget(f"no column with id {edit.column_id!r}", columnId=edit.column_id) from None
    if len(table.columns) == 1:
        raise InvalidEdit("cannot delete the last column", columnId=edit.column_id)
    column = table.columns[idx]
    dropped: dict[str, list[tuple[int, dict]]] = {}
    for other in table.columns:
        if other.column_id == edit.column_id or other.annotation is None:
            continue
        hits = [
            (pos, prop.to_doc())
            for pos, prop in enumerate(other.annotation.properties)
            if prop.target_column_id == edit.column_id
        ]
        if hits:
            dropped[other.column_id] = hits
    op = DeleteColumnOp(
        column_index=idx,
        column_doc=column.to_doc(),
        cells={row.row_id: row.cells[idx].to_doc() for row in table.rows},
        dropped_properties=dropped,
    )
    op.apply(table)
    record_and_touch(table, op)


def _rename_header(table: AnnotatedTable, edit: RenameHeader) -> None:
    try:
        column = table.get_column(edit.column_id)
    except UnknownColumn:
        raise UnknownTarget(f"no column with id {edit.column_id!r}", columnId=edit.column_id) from None
    op = RenameHeaderOp(column_id=edit.column_id, before=column.header, after=edit.new_header)
    op.apply(table)
    record_and_touch(table, op)

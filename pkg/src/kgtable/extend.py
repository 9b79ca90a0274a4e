"""Data extension: new columns fed from a service, keyed by matched entities.

The network fetch and the table mutation are separate layers:
apply_extension_result is pure table surgery (one reversible unit), and
extend_column wires it to a registered service. Unmatched source rows
simply yield empty cells; a service omitting some entities still
extends the table, with the omissions reported in the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .annotate import link_uri
from .errors import NoMatchedCells, PreconditionUnmatchedColumn
from .history import ExtendOp, record_and_touch
from .model import (
    AnnotatedTable,
    Candidate,
    Cell,
    ColumnAnnotation,
    MatchStatus,
    MATCHED_STATUSES,
    PropertyAnnotation,
)
from .recon import ExtensionValue
from .registry import ServiceRegistry


@dataclass
class ExtensionOutcome:
    table: AnnotatedTable
    column_ids: list[str]
    omitted_entities: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_doc(self) -> dict[str, Any]:
        return {
            "columnIds": list(self.column_ids),
            "omittedEntities": list(self.omitted_entities),
            "warnings": list(self.warnings),
        }


def matched_entities(table: AnnotatedTable, column_id: str) -> dict[str, str]:
    """row id -> matched entity id, for matched cells of one column."""
    out: dict[str, str] = {}
    for cell_id, cell in table.column_cells(column_id):
        if cell.status in MATCHED_STATUSES:
            matched = cell.matched_candidate()
            if matched is not None:
                row_id = cell_id.partition(":")[0]
                out[row_id] = matched.entity_id
    return out


def propose_properties(
    registry: ServiceRegistry,
    service_id: str,
    table: AnnotatedTable,
    column_id: str,
    type_id: Optional[str] = None,
) -> list[tuple[str, str]]:
    """Deduplicated (propertyId, propertyName) list the service offers."""
    if not matched_entities(table, column_id):
        raise NoMatchedCells(f"column {column_id!r} has no matched cells to extend from", columnId=column_id)
    seen = set()
    out = []
    for pid, name in registry.propose_properties(service_id, type_id):
        if pid not in seen:
            seen.add(pid)
            out.append((pid, name))
    return out


def _value_cell(values: list[ExtensionValue], identifier_space: str) -> Cell:
    """Build one appended cell from a value list (first value wins)."""
    if not values:
        return Cell(label="")
    first = values[0]
    meta: dict[str, Any] = {}
    if len(values) > 1:
        meta["allValues"] = [v.text for v in values]
    if first.is_entity and first.entity_id:
        candidate = Candidate(
            entity_id=first.entity_id,
            name=first.text,
            score=1.0,
            match=True,
            uri=link_uri(identifier_space, first.entity_id) if identifier_space else None,
        )
        return Cell(label=first.text, candidates=[candidate], status=MatchStatus.MATCHED_AUTO, meta=meta)
    return Cell(label=first.text, meta=meta)


def apply_extension_result(
    table: AnnotatedTable,
    column_id: str,
    meta: list[tuple[str, str]],
    rows: dict[str, dict[str, list[ExtensionValue]]],
    entity_by_row: dict[str, str],
    service_id: str = "",
    identifier_space: str = "",
) -> list[str]:
    """Append one column per property and record the CPA, one undo unit.

    ``rows`` is keyed by entity id exactly as the wire result; rows
    whose source cell is unmatched (absent from entity_by_row) get empty
    cells. Returns the new column ids in insertion order.
    """
    source = table.get_column(column_id)
    source_index = table.column_index(column_id)
    next_seq_before = table.next_col_seq

    inserted: list[dict[str, Any]] = []
    new_props: list[PropertyAnnotation] = []
    for offset, (property_id, property_name) in enumerate(meta):
        new_id = table.new_column_id()
        column_doc = {
            "id": new_id,
            "header": property_name,
            "role": "NONE",
            "annotation": None,
            "provenance": {
                "serviceId": service_id,
                "sourceColumnId": column_id,
                "propertyId": property_id,
            },
        }
        cells: dict[str, Any] = {}
        for row in table.rows:
            entity_id = entity_by_row.get(row.row_id)
            values = rows.get(entity_id, {}).get(property_id, []) if entity_id else []
            cells[row.row_id] = _value_cell(values, identifier_space).to_doc()
        inserted.append({"index": source_index + 1 + offset, "column": column_doc, "cells": cells})
        new_props.append(
            PropertyAnnotation(
                property_id=property_id,
                property_name=property_name,
                target_column_id=new_id,
                score=1.0,
                match=True,
            )
        )

    annotation = source.annotation or ColumnAnnotation(status=MatchStatus.MATCHED_AUTO)
    source_before = {
        "annotation": source.annotation.to_doc() if source.annotation else None,
        "role": source.role.value,
    }
    after_props = annotation.properties + new_props
    source_after = {
        "annotation": ColumnAnnotation(
            type_candidates=annotation.type_candidates,
            properties=after_props,
            status=annotation.status if annotation.status is not MatchStatus.NONE else MatchStatus.MATCHED_AUTO,
        ).to_doc(),
        "role": source.role.value,
    }

    op = ExtendOp(
        source_column_id=column_id,
        inserted=inserted,
        source_before=source_before,
        source_after=source_after,
        next_col_seq_before=next_seq_before,
        next_col_seq_after=table.next_col_seq,
    )
    op.apply(table)
    record_and_touch(table, op)
    return [entry["column"]["id"] for entry in inserted]


def extend_column(
    table: AnnotatedTable,
    column_id: str,
    registry: ServiceRegistry,
    service_id: str,
    property_ids: list[str],
    params: Optional[dict[str, Any]] = None,
) -> ExtensionOutcome:
    """Fetch values for a column's matched entities and append columns."""
    entity_by_row = matched_entities(table, column_id)
    if not entity_by_row:
        raise PreconditionUnmatchedColumn(
            f"column {column_id!r} has no reconciled cells to extend from", columnId=column_id
        )
    entity_ids = sorted(set(entity_by_row.values()))
    result = registry.invoke_extension(service_id, entity_ids, property_ids, params)
    descriptor = registry.get(service_id)
    identifier_space = descriptor.manifest.identifier_space if descriptor.manifest else ""
    column_ids = apply_extension_result(
        table,
        column_id,
        meta=result.meta,
        rows=result.rows,
        entity_by_row=entity_by_row,
        service_id=service_id,
        identifier_space=identifier_space,
    )
    warnings = list(result.warnings)
    if result.omitted_entities:
        warnings.append(
            "service returned no values for: " + ", ".join(sorted(result.omitted_entities))
        )
    return ExtensionOutcome(
        table=table,
        column_ids=column_ids,
        omitted_entities=list(result.omitted_entities),
        warnings=warnings,
    )

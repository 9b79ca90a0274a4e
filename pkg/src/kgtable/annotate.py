"""Applying reconciliation results and match semantics to tables.

Cell-level (CEA) material arrives as normalized candidate lists and is
written onto cells under the table-model invariants; column-level (CTA
and CPA) annotations are stored as the user or a service asserted them,
never inferred here. Every mutation records exactly one reversible
operation.
"""

from __future__ import annotations

import copy
import logging
from typing import Optional

from .errors import (
    DuplicateCandidate,
    StaleCellId,
    SubjectConflict,
    UnknownCandidate,
    UnknownColumn,
    UnknownTargetColumn,
)
from .history import CellEditOp, ColumnAnnotationOp, record_and_touch, snapshot_cells
from .model import (
    AnnotatedTable,
    Candidate,
    ColumnAnnotation,
    ColumnRole,
    MatchStatus,
    PropertyAnnotation,
    derive_cell_status,
    sort_candidates,
)

log = logging.getLogger(__name__)


def link_uri(identifier_space: str, entity_id: str) -> str:
    """Resource URI for an entity id within an identifier space."""
    if identifier_space and entity_id.startswith(identifier_space):
        return entity_id
    return f"{identifier_space}{entity_id}"


def normalize_candidates(
    candidates: list[Candidate], identifier_space: str = ""
) -> tuple[list[Candidate], list[str]]:
    """Copy, link, sort, and enforce the single-match rule.

    Returns the normalized list plus warnings (currently only the
    multi-match demotion notice).
    """
    normalized = [copy.deepcopy(c) for c in candidates]
    for cand in normalized:
        if cand.uri is None and identifier_space:
            cand.uri = link_uri(identifier_space, cand.entity_id)
    normalized = sort_candidates(normalized)
    warnings: list[str] = []
    matched = [c for c in normalized if c.match]
    if len(matched) > 1:
        keeper = min(matched, key=lambda c: c.sort_key())
        for cand in matched:
            cand.match = cand is keeper
        warnings.append(
            f"service flagged {len(matched)} matches; kept highest-scoring {keeper.entity_id}"
        )
    return normalized, warnings


def apply_reconciliation(
    table: AnnotatedTable,
    column_id: str,
    per_cell_results: dict[str, list[Candidate]],
    identifier_space: str = "",
) -> AnnotatedTable:
    """Replace candidates on one column's cells from service results.

    Results are keyed by cellId and must all belong to the named column;
    a key pointing at a vanished cell aborts the whole application. The
    column application is a single undo unit.
    """
    table.get_column(column_id)  # raises UnknownColumn
    valid_ids = {cell_id for cell_id, _ in table.column_cells(column_id)}
    stale = sorted(set(per_cell_results) - valid_ids)
    if stale:
        raise StaleCellId(f"results reference cells not in column {column_id!r}: {stale}", cellIds=stale)

    before = snapshot_cells(table, sorted(per_cell_results))
    for cell_id, candidates in per_cell_results.items():
        cell = table.find_cell(cell_id)
        normalized, warnings = normalize_candidates(candidates, identifier_space)
        cell.candidates = normalized
        cell.status = derive_cell_status(normalized, manual=False)
        meta = {k: v for k, v in cell.meta.items() if k != "warnings"}
        if warnings:
            meta["warnings"] = warnings
            log.warning("cell %s: %s", cell_id, "; ".join(warnings))
        cell.meta = meta
    after = snapshot_cells(table, sorted(per_cell_results))

    changes = {
        cid: {"before": before[cid], "after": after[cid]}
        for cid in before
        if before[cid] != after[cid]
    }
    if changes:  # re-applying identical results is a no-op, incl. history
        record_and_touch(table, CellEditOp(kind="reconcile", changes=changes))
    return table


def select_candidate(table: AnnotatedTable, cell_id: str, entity_id: str) -> AnnotatedTable:
    """Mark one candidate as the human-chosen match for its cell."""
    cell = table.find_cell(cell_id)
    chosen = cell.find_candidate(entity_id)
    if chosen is None:
        raise UnknownCandidate(f"cell {cell_id!r} has no candidate {entity_id!r}", cellId=cell_id, entityId=entity_id)

    already = (
        cell.status is MatchStatus.MATCHED_MANUAL
        and chosen.match
        and sum(1 for c in cell.candidates if c.match) == 1
    )
    if already:
        return table  # idempotent: no state change, no history entry

    before = snapshot_cells(table, [cell_id])
    for cand in cell.candidates:
        cand.match = cand.entity_id == entity_id
    cell.status = MatchStatus.MATCHED_MANUAL
    after = snapshot_cells(table, [cell_id])
    record_and_touch(
        table, CellEditOp(kind="select-candidate", changes={cell_id: {"before": before[cell_id], "after": after[cell_id]}})
    )
    return table


def add_manual_candidate(table: AnnotatedTable, cell_id: str, candidate: Candidate) -> AnnotatedTable:
    """Insert a user-supplied candidate, unmatched, in canonical position."""
    cell = table.find_cell(cell_id)
    if cell.find_candidate(candidate.entity_id) is not None:
        raise DuplicateCandidate(
            f"cell {cell_id!r} already has candidate {candidate.entity_id!r}",
            cellId=cell_id,
            entityId=candidate.entity_id,
        )
    before = snapshot_cells(table, [cell_id])
    added = copy.deepcopy(candidate)
    added.match = False  # selection is a separate act
    cell.candidates = sort_candidates(cell.candidates + [added])
    cell.status = derive_cell_status(cell.candidates, manual=cell.status is MatchStatus.MATCHED_MANUAL)
    after = snapshot_cells(table, [cell_id])
    record_and_touch(
        table, CellEditOp(kind="add-candidate", changes={cell_id: {"before": before[cell_id], "after": after[cell_id]}})
    )
    return table


def annotate_column(
    table: AnnotatedTable,
    column_id: str,
    type_candidates: Optional[list[Candidate]] = None,
    properties: Optional[list[PropertyAnnotation]] = None,
    subject: bool = False,
) -> AnnotatedTable:
    """Set the full schema-level annotation state of one column."""
    column = table.get_column(column_id)
    types = sort_candidates([copy.deepcopy(c) for c in (type_candidates or [])])
    props = [copy.deepcopy(p) for p in (properties or [])]

    for prop in props:
        if prop.target_column_id == column_id:
            raise UnknownTargetColumn(
                f"property {prop.property_id!r} may not target its own column", columnId=column_id
            )
        try:
            table.get_column(prop.target_column_id)
        except UnknownColumn:
            raise UnknownTargetColumn(
                f"property {prop.property_id!r} targets missing column {prop.target_column_id!r}",
                columnId=prop.target_column_id,
            ) from None

    if subject:
        existing = table.subject_column()
        if existing is not None and existing.column_id != column_id:
            raise SubjectConflict(
                f"column {existing.column_id!r} is already the subject column",
                columnId=existing.column_id,
            )

    if subject:
        role = ColumnRole.SUBJECT
    elif types or props:
        role = ColumnRole.ATTRIBUTE
    else:
        role = ColumnRole.NONE

    if types or props:
        annotation = ColumnAnnotation(
            type_candidates=types, properties=props, status=MatchStatus.MATCHED_MANUAL
        )
    else:
        annotation = None

    before = {
        "annotation": column.annotation.to_doc() if column.annotation else None,
        "role": column.role.value,
    }
    after = {"annotation": annotation.to_doc() if annotation else None, "role": role.value}
    if before == after:
        return table
    op = ColumnAnnotationOp(column_id=column_id, before=before, after=after)
    op.apply(table)
    record_and_touch(table, op)
    return table

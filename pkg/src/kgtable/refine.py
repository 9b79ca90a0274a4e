"""Refinement: metadata filters, search, and automatic match assignment.

Filters and search are pure queries sharing one cell predicate; the two
refine strategies assign matches column-wide in a single undo unit and
never touch cells a human matched. Score ties always block automatic
decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .errors import EmptyTypeSet, InvalidFilter, InvalidQuery, NonFiniteThreshold
from .history import CellEditOp, record_and_touch, snapshot_cells
from .model import AnnotatedTable, Cell, MatchStatus, derive_cell_status


class FilterKind(str, Enum):
    LABEL_TEXT = "LABEL_TEXT"
    META_NAME = "META_NAME"
    META_TYPE = "META_TYPE"
    STATUS = "STATUS"


class SearchKind(str, Enum):
    LABEL = "LABEL"
    CANDIDATE_NAME = "CANDIDATE_NAME"
    TYPE_NAME = "TYPE_NAME"


_SEARCH_TO_FILTER = {
    SearchKind.LABEL: FilterKind.LABEL_TEXT,
    SearchKind.CANDIDATE_NAME: FilterKind.META_NAME,
    SearchKind.TYPE_NAME: FilterKind.META_TYPE,
}


@dataclass
class RowFilter:
    kind: FilterKind
    needle: Union[str, set[MatchStatus]]
    scope: Optional[set[str]] = field(default=None)  # column ids; None = all

    def __post_init__(self):
        if self.kind is FilterKind.STATUS:
            if isinstance(self.needle, str) or not self.needle:
                raise InvalidFilter("STATUS filter needs a non-empty set of statuses")
            try:
                self.needle = {MatchStatus(s) for s in self.needle}
            except ValueError as exc:
                raise InvalidFilter(f"unknown status in filter: {exc}") from None
        else:
            if not isinstance(self.needle, str) or not self.needle:
                raise InvalidFilter(f"{self.kind.value} filter needs a non-empty needle")

    @staticmethod
    def from_doc(doc: dict) -> "RowFilter":
        try:
            kind = FilterKind(doc.get("kind"))
        except ValueError:
            raise InvalidFilter(f"unknown filter kind {doc.get('kind')!r}") from None
        needle = doc.get("needle")
        if kind is FilterKind.STATUS and isinstance(needle, list):
            needle = set(needle)
        scope = doc.get("scope")
        return RowFilter(kind=kind, needle=needle, scope=set(scope) if scope else None)


def cell_matches(cell: Cell, kind: FilterKind, needle: Union[str, set[MatchStatus]]) -> bool:
    """The one predicate shared by filterRows and searchCells."""
    if kind is FilterKind.STATUS:
        return cell.status in needle
    text = needle.lower()
    if kind is FilterKind.LABEL_TEXT:
        return text in cell.label.lower()
    if kind is FilterKind.META_NAME:
        return any(text in c.name.lower() for c in cell.candidates)
    return any(text in t.name.lower() for c in cell.candidates for t in c.types)


def filter_rows(table: AnnotatedTable, row_filter: RowFilter) -> tuple[list[str], dict[str, list[str]]]:
    """Rows with at least one matching in-scope cell, plus those cells.

    Pure: the table is never mutated. Cell ids come back in column
    order so the UI can highlight them directly.
    """
    matching_rows: list[str] = []
    highlights: dict[str, list[str]] = {}
    for row in table.rows:
        hits = []
        for col, cell in zip(table.columns, row.cells):
            if row_filter.scope is not None and col.column_id not in row_filter.scope:
                continue
            if cell_matches(cell, row_filter.kind, row_filter.needle):
                hits.append(f"{row.row_id}:{col.column_id}")
        if hits:
            matching_rows.append(row.row_id)
            highlights[row.row_id] = hits
    return matching_rows, highlights


def search_cells(table: AnnotatedTable, query: str, search_kind: Union[SearchKind, str]) -> list[str]:
    """Cell ids whose label or annotation metadata contains the query."""
    try:
        kind = SearchKind(search_kind)
    except ValueError:
        raise InvalidQuery(f"unknown search kind {search_kind!r}") from None
    if not query:
        raise InvalidQuery("search query must not be empty")
    filter_kind = _SEARCH_TO_FILTER[kind]
    out = []
    for row in table.rows:
        for col, cell in zip(table.columns, row.cells):
            if cell_matches(cell, filter_kind, query):
                out.append(f"{row.row_id}:{col.column_id}")
    return out


def _record_changes(table: AnnotatedTable, kind: str, before: dict, after: dict) -> None:
    changes = {
        cid: {"before": before[cid], "after": after[cid]}
        for cid in before
        if before[cid] != after[cid]
    }
    if changes:
        record_and_touch(table, CellEditOp(kind=kind, changes=changes))


def refine_by_type(
    table: AnnotatedTable,
    column_id: str,
    accepted_type_ids: list[str],
    by_name: bool = False,
) -> AnnotatedTable:
    """Match the best type-eligible candidate per cell, ties abstain.

    With by_name=True the accepted values are case-insensitive
    substrings of type names instead of exact type ids. Cells matched
    manually are never touched.
    """
    accepted = [t for t in accepted_type_ids if t]
    if not accepted:
        raise EmptyTypeSet("refineByType needs at least one accepted type")
    cells = table.column_cells(column_id)  # raises UnknownColumn

    if by_name:
        needles = [t.lower() for t in accepted]

        def eligible(cand) -> bool:
            return any(n in t.name.lower() for t in cand.types for n in needles)
    else:
        wanted = set(accepted)

        def eligible(cand) -> bool:
            return any(t.type_id in wanted for t in cand.types)

    cell_ids = [cid for cid, _ in cells]
    before = snapshot_cells(table, cell_ids)
    for cell_id, cell in cells:
        if cell.status is MatchStatus.MATCHED_MANUAL:
            continue
        pool = [c for c in cell.candidates if eligible(c)]
        if not pool:
            continue
        best = min(pool, key=lambda c: c.sort_key())
        if sum(1 for c in pool if c.score == best.score) != 1:
            continue  # tie among eligible candidates: a human must decide
        for cand in cell.candidates:
            cand.match = cand is best
        cell.status = MatchStatus.MATCHED_AUTO
    after = snapshot_cells(table, cell_ids)
    _record_changes(table, "refine-type", before, after)
    return table


def refine_by_score(table: AnnotatedTable, column_id: str, threshold: float) -> AnnotatedTable:
    """Match each cell's top candidate iff it clears the threshold alone.

    A top score below the threshold, or tied with the runner-up, clears
    automatic match flags (the cell returns to AMBIGUOUS). Manual
    matches are never touched; raising the threshold never matches more
    cells.
    """
    threshold = float(threshold)
    if not math.isfinite(threshold):
        raise NonFiniteThreshold(f"threshold must be finite, got {threshold!r}")
    cells = table.column_cells(column_id)

    cell_ids = [cid for cid, _ in cells]
    before = snapshot_cells(table, cell_ids)
    for cell_id, cell in cells:
        if cell.status is MatchStatus.MATCHED_MANUAL or not cell.candidates:
            continue
        top = cell.candidates[0]
        clear_winner = len(cell.candidates) == 1 or top.score > cell.candidates[1].score
        if top.score >= threshold and clear_winner:
            for cand in cell.candidates:
                cand.match = cand is top
            cell.status = MatchStatus.MATCHED_AUTO
        else:
            for cand in cell.candidates:
                cand.match = False
            cell.status = derive_cell_status(cell.candidates)
    after = snapshot_cells(table, cell_ids)
    _record_changes(table, "refine-score", before, after)
    return table

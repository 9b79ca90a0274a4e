"""Shared test machinery: random table generation, random operation
sequences, and brute-force oracles.

The oracles work on the plain ``to_doc`` dictionaries and restate the
documented rules from scratch, so they share no code with the package
internals they check.
"""

from __future__ import annotations

import copy
import random
from typing import Any, Optional

from kgtable import annotate, edits, extend, refine
from kgtable.model import (
    AnnotatedTable,
    Candidate,
    Cell,
    Column,
    ColumnAnnotation,
    ColumnRole,
    EntityType,
    MatchStatus,
    PropertyAnnotation,
    Row,
    derive_cell_status,
    sort_candidates,
    validate_table,
)

def fingerprint(table: AnnotatedTable) -> dict:
    """Full table state minus the timestamp, for deep-equality checks."""
    doc = table.to_doc()
    doc.pop("lastModified")
    return doc


WORDS = [
    "rome", "paris", "berlin", "madrid", "london", "lyon", "oslo", "turin",
    "museum", "bridge", "river", "castle", "island", "harbor", "garden",
    "umlaut-ü", "comma,label", 'quote"label', "",
]

TYPE_POOL = [
    ("urn:t:city", "city"),
    ("urn:t:town", "town"),
    ("urn:t:person", "person"),
    ("urn:t:museum", "museum"),
    ("urn:t:club", "football club"),
]


def q_score(rng: random.Random) -> float:
    """Scores quantized to 0.05 steps so exact ties are common."""
    return round(rng.randrange(0, 21) * 0.05, 2)


def random_candidates(rng: random.Random, max_candidates: int = 8) -> list[Candidate]:
    count = rng.randint(0, max_candidates)
    ids = rng.sample(range(1000), count)
    out = []
    for i in ids:
        types = [EntityType(tid, name) for tid, name in rng.sample(TYPE_POOL, rng.randint(0, 2))]
        out.append(
            Candidate(
                entity_id=f"urn:t:e{i}",
                name=rng.choice(WORDS) or "thing",
                score=q_score(rng),
                match=False,
                types=types,
                description=rng.choice([None, "some description"]),
                uri=f"urn:t:e{i}",
            )
        )
    return sort_candidates(out)


def random_cell(rng: random.Random, max_candidates: int = 8) -> Cell:
    label = rng.choice(WORDS)
    candidates = random_candidates(rng, max_candidates) if rng.random() < 0.75 else []
    manual = False
    if candidates and rng.random() < 0.45:
        rng.choice(candidates).match = True
        manual = rng.random() < 0.5
    status = derive_cell_status(candidates, manual=manual)
    meta = {"note": rng.choice(WORDS)} if rng.random() < 0.15 else {}
    return Cell(label=label, candidates=candidates, status=status, meta=meta)


def make_random_table(
    rng: random.Random,
    max_rows: int = 20,
    max_cols: int = 10,
    max_candidates: int = 8,
    min_rows: int = 0,
    min_cols: int = 1,
) -> AnnotatedTable:
    n_cols = rng.randint(min_cols, max_cols)
    n_rows = rng.randint(min_rows, max_rows)
    columns = [Column(column_id=f"c{i}", header=f"H{i}_{rng.choice(WORDS) or 'x'}") for i in range(n_cols)]
    rows = [
        Row(row_id=f"r{j}", cells=[random_cell(rng, max_candidates) for _ in range(n_cols)])
        for j in range(n_rows)
    ]
    table = AnnotatedTable(
        table_id=f"rand-{rng.randrange(10**9)}",
        name="random table",
        columns=columns,
        rows=rows,
        next_row_seq=n_rows,
        next_col_seq=n_cols,
    )

    subject_given = False
    for col in table.columns:
        if rng.random() < 0.3:
            types = random_candidates(rng, 2)
            others = [c.column_id for c in table.columns if c.column_id != col.column_id]
            props = []
            for target in rng.sample(others, min(len(others), rng.randint(0, 2))):
                props.append(
                    PropertyAnnotation(
                        property_id=f"urn:p:{rng.randrange(100)}",
                        property_name=rng.choice(WORDS) or "prop",
                        target_column_id=target,
                        score=q_score(rng),
                        match=rng.random() < 0.8,
                    )
                )
            if types or props:
                col.annotation = ColumnAnnotation(
                    type_candidates=types,
                    properties=props,
                    status=MatchStatus.MATCHED_MANUAL if rng.random() < 0.5 else MatchStatus.AMBIGUOUS,
                )
                col.role = ColumnRole.ATTRIBUTE
        if not subject_given and rng.random() < 0.15:
            col.role = ColumnRole.SUBJECT
            subject_given = True

    problems = validate_table(table)
    assert problems == [], f"generator produced an invalid table: {problems}"
    return table


# ---- brute-force oracles (operate on to_doc dicts only) ----

def _doc_cells(doc: dict, column_id: str) -> dict[str, dict]:
    idx = [c["id"] for c in doc["columns"]].index(column_id)
    return {f"{row['id']}:{column_id}": row["cells"][idx] for row in doc["rows"]}


def oracle_refine_by_score(doc: dict, column_id: str, threshold: float) -> dict[str, dict]:
    """Expected post-refine cell docs, recomputed from the rule text."""
    expected: dict[str, dict] = {}
    for cell_id, cell in _doc_cells(doc, column_id).items():
        after = copy.deepcopy(cell)
        cands = after["candidates"]
        if cell["status"] == "MATCHED_MANUAL" or not cands:
            expected[cell_id] = after
            continue
        top_score = max(c["score"] for c in cands)
        winners = [c for c in cands if c["score"] == top_score]
        if top_score >= threshold and len(winners) == 1:
            for c in cands:
                c["match"] = c is winners[0]
            after["status"] = "MATCHED_AUTO"
        else:
            for c in cands:
                c["match"] = False
            after["status"] = "AMBIGUOUS"
        expected[cell_id] = after
    return expected


def oracle_refine_by_type(
    doc: dict, column_id: str, accepted: list[str], by_name: bool = False
) -> dict[str, dict]:
    expected: dict[str, dict] = {}
    needles = [a.lower() for a in accepted]
    for cell_id, cell in _doc_cells(doc, column_id).items():
        after = copy.deepcopy(cell)
        cands = after["candidates"]
        if cell["status"] == "MATCHED_MANUAL":
            expected[cell_id] = after
            continue

        def ok(cand: dict) -> bool:
            if by_name:
                return any(n in t["name"].lower() for t in cand["type"] for n in needles)
            return any(t["id"] in accepted for t in cand["type"])

        eligible = [c for c in cands if ok(c)]
        if eligible:
            best = max(c["score"] for c in eligible)
            winners = [c for c in eligible if c["score"] == best]
            if len(winners) == 1:
                for c in cands:
                    c["match"] = c is winners[0]
                after["status"] = "MATCHED_AUTO"
        expected[cell_id] = after
    return expected


def oracle_filter_rows(
    doc: dict, kind: str, needle, scope: Optional[set[str]] = None
) -> tuple[list[str], dict[str, list[str]]]:
    def hits(cell: dict) -> bool:
        if kind == "STATUS":
            return cell["status"] in needle
        text = needle.lower()
        if kind == "LABEL_TEXT":
            return text in cell["label"].lower()
        if kind == "META_NAME":
            return any(text in c["name"].lower() for c in cell["candidates"])
        return any(text in t["name"].lower() for c in cell["candidates"] for t in c["type"])

    rows, highlights = [], {}
    for row in doc["rows"]:
        found = []
        for col, cell in zip(doc["columns"], row["cells"]):
            if scope is not None and col["id"] not in scope:
                continue
            if hits(cell):
                found.append(f"{row['id']}:{col['id']}")
        if found:
            rows.append(row["id"])
            highlights[row["id"]] = found
    return rows, highlights


def column_cell_docs(table: AnnotatedTable, column_id: str) -> dict[str, dict]:
    return {cell_id: cell.to_doc() for cell_id, cell in table.column_cells(column_id)}


# ---- random operation sequences (for undo/redo properties) ----

def _random_result_candidates(rng: random.Random) -> list[Candidate]:
    cands = random_candidates(rng, 4)
    # occasionally hand back multiple match flags to exercise demotion
    flagged = rng.randint(0, min(2, len(cands)))
    for cand in rng.sample(cands, flagged):
        cand.match = True
    return cands


def apply_random_operation(rng: random.Random, table: AnnotatedTable, op_counter: list[int]) -> bool:
    """Apply one randomly chosen recordable mutation; False if infeasible."""
    choices = rng.sample(range(10), 10)
    for choice in choices:
        if choice == 0 and table.rows:
            row = rng.choice(table.rows)
            col = rng.choice(table.columns)
            edits.apply_edit(table, edits.RenameCell(f"{row.row_id}:{col.column_id}", rng.choice(WORDS)))
            return True
        if choice == 1 and table.rows:
            edits.apply_edit(table, edits.DeleteRow(rng.choice(table.rows).row_id))
            return True
        if choice == 2 and len(table.columns) > 1:
            edits.apply_edit(table, edits.DeleteColumn(rng.choice(table.columns).column_id))
            return True
        if choice == 3:
            col = rng.choice(table.columns)
            edits.apply_edit(table, edits.RenameHeader(col.column_id, f"renamed-{rng.randrange(100)}"))
            return True
        if choice == 4:
            cells = [(f"{r.row_id}:{c.column_id}", cell)
                     for r in table.rows for c, cell in zip(table.columns, r.cells) if cell.candidates]
            if cells:
                cell_id, cell = rng.choice(cells)
                annotate.select_candidate(table, cell_id, rng.choice(cell.candidates).entity_id)
                return True
        if choice == 5 and table.rows:
            row = rng.choice(table.rows)
            col = rng.choice(table.columns)
            op_counter[0] += 1
            fresh = Candidate(entity_id=f"urn:new:{op_counter[0]}", name="added", score=q_score(rng))
            annotate.add_manual_candidate(table, f"{row.row_id}:{col.column_id}", fresh)
            return True
        if choice == 6:
            col = rng.choice(table.columns)
            others = [c.column_id for c in table.columns if c.column_id != col.column_id]
            props = []
            if others and rng.random() < 0.5:
                props = [PropertyAnnotation("urn:p:x", "rel", rng.choice(others), score=0.9, match=True)]
            types = random_candidates(rng, 2)
            subject = table.subject_column() is None and rng.random() < 0.3
            annotate.annotate_column(table, col.column_id, types, props, subject)
            return True
        if choice == 7 and table.rows:
            col = rng.choice(table.columns)
            targets = [cid for cid, _ in table.column_cells(col.column_id)]
            chosen = rng.sample(targets, rng.randint(1, len(targets)))
            results = {cid: _random_result_candidates(rng) for cid in chosen}
            annotate.apply_reconciliation(table, col.column_id, results, "urn:t:")
            return True
        if choice == 8:
            col = rng.choice(table.columns)
            if rng.random() < 0.5:
                refine.refine_by_score(table, col.column_id, q_score(rng))
            else:
                accepted = [rng.choice(TYPE_POOL)[0] for _ in range(rng.randint(1, 2))]
                refine.refine_by_type(table, col.column_id, accepted, by_name=rng.random() < 0.3)
            return True
        if choice == 9 and table.rows:
            col = rng.choice(table.columns)
            entity_by_row = extend.matched_entities(table, col.column_id)
            if entity_by_row:
                op_counter[0] += 1
                n = op_counter[0]
                meta = [(f"urn:p:ext{n}", f"ext{n}"), (f"urn:p:ext{n}b", f"ext{n}b")][: rng.randint(1, 2)]
                rows_payload: dict[str, Any] = {}
                for entity_id in set(entity_by_row.values()):
                    if rng.random() < 0.8:
                        from kgtable.recon import ExtensionValue

                        values = {}
                        for pid, _name in meta:
                            pick = rng.random()
                            if pick < 0.3:
                                values[pid] = []
                            elif pick < 0.6:
                                values[pid] = [ExtensionValue("str", rng.choice(WORDS) or "v")]
                            elif pick < 0.8:
                                values[pid] = [
                                    ExtensionValue("str", "a"),
                                    ExtensionValue("int", str(rng.randrange(100))),
                                ]
                            else:
                                values[pid] = [ExtensionValue("entity", "Linked", entity_id=f"urn:t:le{n}")]
                        rows_payload[entity_id] = values
                extend.apply_extension_result(
                    table, col.column_id, meta, rows_payload, entity_by_row, "svc", "urn:t:"
                )
                return True
    return False


def run_random_sequence(rng: random.Random, table: AnnotatedTable, ops: int) -> int:
    """Apply up to ``ops`` random mutations; returns how many were recorded."""
    counter = [0]
    start_depth = len(table.history.undo_stack)
    for _ in range(ops):
        apply_random_operation(rng, table, counter)
        problems = validate_table(table)
        assert problems == [], f"operation broke an invariant: {problems}"
    return len(table.history.undo_stack) - start_depth

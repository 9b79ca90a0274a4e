import pytest

from kgtable.annotate import (
    add_manual_candidate,
    annotate_column,
    apply_reconciliation,
    link_uri,
    normalize_candidates,
    select_candidate,
)
from kgtable.errors import (
    DuplicateCandidate,
    StaleCellId,
    SubjectConflict,
    UnknownCandidate,
    UnknownCell,
    UnknownColumn,
    UnknownTargetColumn,
)
from kgtable.history import redo, undo
from kgtable.model import (
    AnnotatedTable,
    Candidate,
    Cell,
    Column,
    ColumnRole,
    MatchStatus,
    PropertyAnnotation,
    Row,
)

from helpers import fingerprint


def two_column_table():
    return AnnotatedTable(
        table_id="t",
        name="T",
        columns=[Column("c0", "City"), Column("c1", "Country")],
        rows=[
            Row("r0", [Cell("Rome"), Cell("Italy")]),
            Row("r1", [Cell("Lyon"), Cell("France")]),
            Row("r2", [Cell(""), Cell("Nowhere")]),
        ],
        next_row_seq=3,
        next_col_seq=2,
    )


def results_for(table):
    return {
        "r0:c0": [
            Candidate("urn:t:Rome", "Rome", 0.98, True),
            Candidate("urn:t:Roma_FC", "Roma FC", 0.40),
        ],
        "r1:c0": [
            Candidate("urn:t:Lyon", "Lyon", 0.80),
            Candidate("urn:t:Lyon_Metro", "Metropolis of Lyon", 0.35),
        ],
        "r2:c0": [],
    }


class TestLinkUri:
    def test_prefixes_identifier_space(self):
        assert link_uri("https://kg.example/", "Q1") == "https://kg.example/Q1"

    def test_already_absolute_ids_kept(self):
        assert link_uri("urn:t:", "urn:t:Rome") == "urn:t:Rome"

    def test_empty_space_returns_id(self):
        assert link_uri("", "Q1") == "Q1"


class TestNormalizeCandidates:
    def test_sorts_and_links(self):
        raw = [Candidate("b", "B", 0.5), Candidate("a", "A", 0.9)]
        normalized, warnings = normalize_candidates(raw, "urn:t:")
        assert [c.entity_id for c in normalized] == ["a", "b"]
        assert normalized[0].uri == "urn:t:a"
        assert warnings == []

    def test_existing_uri_untouched(self):
        raw = [Candidate("a", "A", 0.9, uri="https://elsewhere/a")]
        normalized, _ = normalize_candidates(raw, "urn:t:")
        assert normalized[0].uri == "https://elsewhere/a"

    def test_input_not_mutated(self):
        raw = [Candidate("b", "B", 0.5, True), Candidate("a", "A", 0.9, True)]
        normalize_candidates(raw, "urn:t:")
        assert raw[0].entity_id == "b"
        assert raw[0].uri is None
        assert raw[0].match and raw[1].match

    def test_multi_match_demoted_to_best(self):
        raw = [
            Candidate("low", "Low", 0.4, True),
            Candidate("high", "High", 0.9, True),
            Candidate("mid", "Mid", 0.6, False),
        ]
        normalized, warnings = normalize_candidates(raw)
        matches = [c.entity_id for c in normalized if c.match]
        assert matches == ["high"]
        assert len(warnings) == 1
        assert "2 matches" in warnings[0] and "high" in warnings[0]

    def test_score_tie_demotion_keeps_lowest_id(self):
        raw = [Candidate("zeta", "Z", 0.7, True), Candidate("alpha", "A", 0.7, True)]
        normalized, warnings = normalize_candidates(raw)
        assert [c.entity_id for c in normalized if c.match] == ["alpha"]
        assert warnings


class TestApplyReconciliation:
    def test_statuses_derived_per_cell(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        assert table.find_cell("r0:c0").status is MatchStatus.MATCHED_AUTO
        assert table.find_cell("r1:c0").status is MatchStatus.AMBIGUOUS
        assert table.find_cell("r2:c0").status is MatchStatus.NONE
        assert table.find_cell("r0:c0").candidates[0].uri == "urn:t:Rome"
        # untouched column stays pristine
        assert table.find_cell("r0:c1").status is MatchStatus.NONE

    def test_single_undo_unit_per_column(self):
        table = two_column_table()
        initial = fingerprint(table)
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        assert len(table.history.undo_stack) == 1
        undo(table)
        assert fingerprint(table) == initial

    def test_redo_restores_results(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        enriched = fingerprint(table)
        undo(table)
        redo(table)
        assert fingerprint(table) == enriched

    def test_unknown_column_rejected(self):
        with pytest.raises(UnknownColumn):
            apply_reconciliation(two_column_table(), "c9", {})

    def test_stale_cell_id_aborts_whole_application(self):
        table = two_column_table()
        initial = fingerprint(table)
        results = results_for(table)
        results["r9:c0"] = [Candidate("urn:t:X", "X", 0.5)]
        with pytest.raises(StaleCellId) as err:
            apply_reconciliation(table, "c0", results)
        assert err.value.details["cellIds"] == ["r9:c0"]
        assert fingerprint(table) == initial
        assert len(table.history.undo_stack) == 0

    def test_cell_from_wrong_column_is_stale(self):
        table = two_column_table()
        with pytest.raises(StaleCellId):
            apply_reconciliation(table, "c0", {"r0:c1": []})

    def test_warnings_meta_replaced_not_accumulated(self):
        table = two_column_table()
        doubled = [Candidate("a", "A", 0.9, True), Candidate("b", "B", 0.8, True)]
        apply_reconciliation(table, "c0", {"r0:c0": doubled})
        first = table.find_cell("r0:c0").meta["warnings"]
        assert len(first) == 1
        apply_reconciliation(table, "c0", {"r0:c0": doubled})
        assert table.find_cell("r0:c0").meta["warnings"] == first

    def test_clean_reapply_drops_stale_warning(self):
        table = two_column_table()
        doubled = [Candidate("a", "A", 0.9, True), Candidate("b", "B", 0.8, True)]
        apply_reconciliation(table, "c0", {"r0:c0": doubled})
        apply_reconciliation(table, "c0", {"r0:c0": [Candidate("a", "A", 0.9, True)]})
        assert "warnings" not in table.find_cell("r0:c0").meta

    def test_identical_reapply_records_nothing(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        state = fingerprint(table)
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        assert fingerprint(table) == state
        assert len(table.history.undo_stack) == 1

    def test_empty_results_accepted(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", {})
        assert len(table.history.undo_stack) == 0


class TestSelectCandidate:
    def seeded(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        return table

    def test_manual_selection(self):
        table = self.seeded()
        select_candidate(table, "r1:c0", "urn:t:Lyon")
        cell = table.find_cell("r1:c0")
        assert cell.status is MatchStatus.MATCHED_MANUAL
        assert [c.entity_id for c in cell.candidates if c.match] == ["urn:t:Lyon"]

    def test_switch_unmatches_previous(self):
        table = self.seeded()
        select_candidate(table, "r0:c0", "urn:t:Roma_FC")
        cell = table.find_cell("r0:c0")
        assert [c.entity_id for c in cell.candidates if c.match] == ["urn:t:Roma_FC"]
        assert cell.status is MatchStatus.MATCHED_MANUAL

    def test_unknown_cell_and_candidate(self):
        table = self.seeded()
        with pytest.raises(UnknownCell):
            select_candidate(table, "r9:c0", "urn:t:Lyon")
        with pytest.raises(UnknownCandidate):
            select_candidate(table, "r1:c0", "urn:t:Atlantis")

    def test_idempotent_selection_records_nothing(self):
        table = self.seeded()
        select_candidate(table, "r1:c0", "urn:t:Lyon")
        depth = len(table.history.undo_stack)
        state = fingerprint(table)
        select_candidate(table, "r1:c0", "urn:t:Lyon")
        assert fingerprint(table) == state
        assert len(table.history.undo_stack) == depth

    def test_undo_restores_auto_status(self):
        table = self.seeded()
        before = fingerprint(table)
        select_candidate(table, "r0:c0", "urn:t:Roma_FC")
        undo(table)
        assert fingerprint(table) == before
        assert table.find_cell("r0:c0").status is MatchStatus.MATCHED_AUTO


class TestAddManualCandidate:
    def test_inserted_sorted_and_unmatched(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        add_manual_candidate(table, "r1:c0", Candidate("urn:t:Lyon_Old", "Old Lyon", 0.95, match=True))
        cell = table.find_cell("r1:c0")
        assert [c.entity_id for c in cell.candidates] == ["urn:t:Lyon_Old", "urn:t:Lyon", "urn:t:Lyon_Metro"]
        assert not cell.candidates[0].match  # match flag is stripped on insert
        assert cell.status is MatchStatus.AMBIGUOUS

    def test_duplicate_rejected(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        with pytest.raises(DuplicateCandidate):
            add_manual_candidate(table, "r1:c0", Candidate("urn:t:Lyon", "Lyon again", 0.5))

    def test_preserves_manual_status(self):
        table = two_column_table()
        apply_reconciliation(table, "c0", results_for(table), identifier_space="urn:t:")
        select_candidate(table, "r1:c0", "urn:t:Lyon")
        add_manual_candidate(table, "r1:c0", Candidate("urn:t:Extra", "Extra", 0.1))
        assert table.find_cell("r1:c0").status is MatchStatus.MATCHED_MANUAL

    def test_first_candidate_on_empty_cell(self):
        table = two_column_table()
        add_manual_candidate(table, "r2:c1", Candidate("urn:t:Nowhere", "Nowhere", 0.3))
        cell = table.find_cell("r2:c1")
        assert cell.status is MatchStatus.AMBIGUOUS
        undo(table)
        assert table.find_cell("r2:c1").candidates == []
        assert table.find_cell("r2:c1").status is MatchStatus.NONE


class TestAnnotateColumn:
    def test_subject_role(self):
        table = two_column_table()
        annotate_column(table, "c0", subject=True)
        assert table.get_column("c0").role is ColumnRole.SUBJECT
        assert table.subject_column().column_id == "c0"

    def test_attribute_role_with_types(self):
        table = two_column_table()
        annotate_column(table, "c1", type_candidates=[Candidate("urn:t:country", "country", 0.9)])
        column = table.get_column("c1")
        assert column.role is ColumnRole.ATTRIBUTE
        assert column.annotation.status is MatchStatus.MATCHED_MANUAL
        assert column.annotation.type_candidates[0].entity_id == "urn:t:country"

    def test_subject_conflict(self):
        table = two_column_table()
        annotate_column(table, "c0", subject=True)
        with pytest.raises(SubjectConflict) as err:
            annotate_column(table, "c1", subject=True)
        assert err.value.details["columnId"] == "c0"

    def test_reasserting_same_subject_is_noop(self):
        table = two_column_table()
        annotate_column(table, "c0", subject=True)
        depth = len(table.history.undo_stack)
        annotate_column(table, "c0", subject=True)
        assert len(table.history.undo_stack) == depth

    def test_property_targets_validated(self):
        table = two_column_table()
        with pytest.raises(UnknownTargetColumn):
            annotate_column(table, "c0", properties=[PropertyAnnotation("p", "p", "c9", 0.5, False)])
        with pytest.raises(UnknownTargetColumn):
            annotate_column(table, "c0", properties=[PropertyAnnotation("p", "p", "c0", 0.5, False)])

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            annotate_column(two_column_table(), "c9", subject=True)

    def test_clearing_annotation(self):
        table = two_column_table()
        annotate_column(table, "c1", type_candidates=[Candidate("urn:t:country", "country", 0.9)])
        annotate_column(table, "c1")
        column = table.get_column("c1")
        assert column.annotation is None
        assert column.role is ColumnRole.NONE

    def test_type_candidates_sorted(self):
        table = two_column_table()
        annotate_column(
            table,
            "c1",
            type_candidates=[Candidate("urn:t:b", "b", 0.5), Candidate("urn:t:a", "a", 0.9)],
        )
        ids = [c.entity_id for c in table.get_column("c1").annotation.type_candidates]
        assert ids == ["urn:t:a", "urn:t:b"]

    def test_undo_and_redo_round_trip(self):
        table = two_column_table()
        plain = fingerprint(table)
        annotate_column(
            table,
            "c0",
            subject=True,
            properties=[PropertyAnnotation("p-in", "in country", "c1", 0.8, True)],
        )
        annotated = fingerprint(table)
        undo(table)
        assert fingerprint(table) == plain
        redo(table)
        assert fingerprint(table) == annotated
        props = table.get_column("c0").annotation.properties
        assert props[0].target_column_id == "c1"

import pytest

from kgtable import extend
from kgtable.annotate import apply_reconciliation, select_candidate
from kgtable.errors import NoMatchedCells, PreconditionUnmatchedColumn, UnknownColumn
from kgtable.history import redo, undo
from kgtable.model import (
    AnnotatedTable,
    Candidate,
    Cell,
    Column,
    ColumnRole,
    MatchStatus,
    Row,
)
from kgtable.recon import ExtensionValue

from helpers import fingerprint


def cities_table():
    table = AnnotatedTable(
        table_id="t",
        name="T",
        columns=[Column("c0", "City"), Column("c1", "Country")],
        rows=[
            Row("r0", [Cell("Rome"), Cell("Italy")]),
            Row("r1", [Cell("Paris"), Cell("France")]),
            Row("r2", [Cell("Atlantis"), Cell("Unknown")]),
        ],
        next_row_seq=3,
        next_col_seq=2,
    )
    apply_reconciliation(
        table,
        "c0",
        {
            "r0:c0": [Candidate("urn:t:Rome", "Rome", 0.98, True)],
            "r1:c0": [Candidate("urn:t:Paris", "Paris", 0.97)],
            "r2:c0": [],
        },
        identifier_space="urn:t:",
    )
    select_candidate(table, "r1:c0", "urn:t:Paris")
    return table


WIRE_META = [("weather", "weather"), ("region", "administrative region")]
WIRE_ROWS = {
    "urn:t:Rome": {
        "weather": [ExtensionValue("str", "clear sky")],
        "region": [ExtensionValue("entity", "Lazio", entity_id="urn:t:Lazio")],
    },
    "urn:t:Paris": {
        "weather": [
            ExtensionValue("str", "light rain"),
            ExtensionValue("str", "drizzle"),
        ],
        "region": [],
    },
}


def apply_wire(table, **overrides):
    kwargs = dict(
        meta=WIRE_META,
        rows=WIRE_ROWS,
        entity_by_row=extend.matched_entities(table, "c0"),
        service_id="svc",
        identifier_space="urn:t:",
    )
    kwargs.update(overrides)
    return extend.apply_extension_result(table, "c0", **kwargs)


class TestMatchedEntities:
    def test_collects_matched_rows_only(self):
        table = cities_table()
        assert extend.matched_entities(table, "c0") == {
            "r0": "urn:t:Rome",
            "r1": "urn:t:Paris",
        }

    def test_empty_for_unreconciled_column(self):
        assert extend.matched_entities(cities_table(), "c1") == {}

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            extend.matched_entities(cities_table(), "c9")


class TestProposeProperties:
    def test_requires_matched_cells(self, registry):
        with pytest.raises(NoMatchedCells):
            extend.propose_properties(registry, "MockWeather", cities_table(), "c1")

    def test_deduplicates_preserving_order(self, registry):
        pairs = extend.propose_properties(registry, "MockWeather", cities_table(), "c0")
        assert pairs[0] == ("weather", "weather")
        assert len({pid for pid, _ in pairs}) == len(pairs)


class TestApplyExtensionResult:
    def test_columns_inserted_after_source(self):
        table = cities_table()
        new_ids = apply_wire(table)
        assert new_ids == ["c2", "c3"]
        assert [c.column_id for c in table.columns] == ["c0", "c2", "c3", "c1"]
        assert [c.header for c in table.columns] == ["City", "weather", "administrative region", "Country"]

    def test_cell_values_follow_matches(self):
        table = cities_table()
        apply_wire(table)
        assert table.find_cell("r0:c2").label == "clear sky"
        assert table.find_cell("r1:c2").label == "light rain"
        # unmatched source row gets an empty cell
        assert table.find_cell("r2:c2").label == ""
        assert table.find_cell("r2:c2").status is MatchStatus.NONE
        # empty value list also yields an empty cell
        assert table.find_cell("r1:c3").label == ""

    def test_multi_values_kept_in_meta(self):
        table = cities_table()
        apply_wire(table)
        cell = table.find_cell("r1:c2")
        assert cell.meta["allValues"] == ["light rain", "drizzle"]
        assert "allValues" not in table.find_cell("r0:c2").meta

    def test_entity_values_arrive_matched(self):
        table = cities_table()
        apply_wire(table)
        cell = table.find_cell("r0:c3")
        assert cell.label == "Lazio"
        assert cell.status is MatchStatus.MATCHED_AUTO
        assert cell.candidates[0].entity_id == "urn:t:Lazio"
        assert cell.candidates[0].score == 1.0
        assert cell.candidates[0].match
        assert cell.candidates[0].uri == "urn:t:Lazio"

    def test_provenance_recorded(self):
        table = cities_table()
        apply_wire(table)
        assert table.get_column("c2").provenance == {
            "serviceId": "svc",
            "sourceColumnId": "c0",
            "propertyId": "weather",
        }

    def test_source_column_gains_property_annotations(self):
        table = cities_table()
        apply_wire(table)
        source = table.get_column("c0")
        assert source.annotation is not None
        targets = {p.property_id: p.target_column_id for p in source.annotation.properties}
        assert targets == {"weather": "c2", "region": "c3"}
        assert source.annotation.status is MatchStatus.MATCHED_AUTO

    def test_existing_annotation_extended_not_replaced(self):
        from kgtable.annotate import annotate_column

        table = cities_table()
        annotate_column(table, "c0", type_candidates=[Candidate("urn:t:city", "city", 0.9)])
        apply_wire(table)
        annotation = table.get_column("c0").annotation
        assert [t.entity_id for t in annotation.type_candidates] == ["urn:t:city"]
        assert {p.property_id for p in annotation.properties} == {"weather", "region"}
        assert annotation.status is MatchStatus.MATCHED_MANUAL  # kept, not downgraded

    def test_single_undo_unit_restores_everything(self):
        table = cities_table()
        initial = fingerprint(table)
        depth = len(table.history.undo_stack)
        apply_wire(table)
        extended = fingerprint(table)
        assert len(table.history.undo_stack) == depth + 1
        undo(table)
        assert fingerprint(table) == initial
        assert table.next_col_seq == 2
        redo(table)
        assert fingerprint(table) == extended

    def test_column_ids_never_reused_after_undo(self):
        table = cities_table()
        apply_wire(table)
        undo(table)
        redo(table)
        assert [c.column_id for c in table.columns] == ["c0", "c2", "c3", "c1"]
        undo(table)
        new_ids = apply_wire(table)
        assert new_ids == ["c2", "c3"]  # seq restored by undo, so ids repeat deterministically

    def test_empty_meta_is_noop_shape(self):
        table = cities_table()
        new_ids = apply_wire(table, meta=[], rows={})
        assert new_ids == []
        assert len(table.columns) == 2


class TestExtendColumn:
    def test_happy_path_via_registry(self, registry):
        table = cities_table()
        table.find_cell("r0:c0").candidates[0] = Candidate("urn:mock:Rome", "Rome", 0.9, True)
        table.find_cell("r1:c0").candidates[0] = Candidate("urn:mock:Paris", "Paris", 0.9, True)
        outcome = extend.extend_column(
            table, "c0", registry, "MockWeather", ["weather", "stationCount"]
        )
        assert outcome.table is table
        assert len(outcome.column_ids) == 2
        weather_col, station_col = outcome.column_ids
        assert table.find_cell(f"r0:{weather_col}").label == "clear sky"
        assert table.find_cell(f"r0:{station_col}").label == "14"
        assert table.find_cell(f"r2:{weather_col}").label == ""
        assert outcome.omitted_entities == []
        assert outcome.warnings == []

    def test_omitted_entities_reported(self, registry):
        table = cities_table()
        # make the matched entity one the weather service has no row for
        table.find_cell("r0:c0").candidates[0] = Candidate("urn:mock:Turin", "Turin", 0.9, True)
        table.find_cell("r1:c0").candidates[0] = Candidate("urn:mock:Rome", "Rome", 0.9, True)
        outcome = extend.extend_column(table, "c0", registry, "MockWeather", ["weather"])
        assert outcome.omitted_entities == ["urn:mock:Turin"]
        assert any("urn:mock:Turin" in w for w in outcome.warnings)
        assert table.find_cell(f"r0:{outcome.column_ids[0]}").label == ""
        assert table.find_cell(f"r1:{outcome.column_ids[0]}").label == "clear sky"

    def test_unreconciled_column_rejected(self, registry):
        with pytest.raises(PreconditionUnmatchedColumn):
            extend.extend_column(cities_table(), "c1", registry, "MockWeather", ["weather"])

    def test_identifier_space_applied_to_entity_values(self, registry):
        table = cities_table()
        table.find_cell("r0:c0").candidates[0] = Candidate("urn:mock:Rome", "Rome", 0.9, True)
        table.find_cell("r1:c0").candidates[0] = Candidate("urn:mock:Paris", "Paris", 0.9, True)
        outcome = extend.extend_column(table, "c0", registry, "MockWeather", ["administrativeRegion"])
        cell = table.find_cell(f"r0:{outcome.column_ids[0]}")
        assert cell.candidates[0].uri == "urn:mock:Lazio"

    def test_outcome_doc_shape(self, registry):
        table = cities_table()
        table.find_cell("r0:c0").candidates[0] = Candidate("urn:mock:Rome", "Rome", 0.9, True)
        table.find_cell("r1:c0").candidates[0] = Candidate("urn:mock:Oslo", "Oslo", 0.9, True)
        outcome = extend.extend_column(table, "c0", registry, "MockWeather", ["coastal"])
        doc = outcome.to_doc()
        assert set(doc) == {"columnIds", "omittedEntities", "warnings"}
        assert doc["columnIds"] == outcome.column_ids
        assert table.find_cell(f"r1:{outcome.column_ids[0]}").label == "true"

"""The one engine the CLI and the REST service share.

Every public method is load-mutate-save against the store: the lock for
a table id serializes its mutations, and a raised error before the save
leaves the stored file byte-identical. Network fetches happen outside
the table lock; results that no longer fit the table (cells vanished in
between) abort the application as a whole.
"""

from __future__ import annotations

import logging
import threading
from contextlib import contextmanager
from typing import Any, Iterator, Optional

from . import annotate, edits, extend, history, refine, tableio
from .errors import ParamValidationError
from .model import AnnotatedTable, Candidate, PropertyAnnotation, table_stats
from .recon import ReconResult
from .registry import ParamSpec, ParamType, ServiceKind, ServiceRegistry
from .store import TableStore

log = logging.getLogger(__name__)


class Engine:
    def __init__(self, store: TableStore, registry: Optional[ServiceRegistry] = None):
        self.store = store
        self.registry = registry or ServiceRegistry()
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, table_id: str) -> threading.RLock:
        with self._locks_guard:
            if table_id not in self._locks:
                self._locks[table_id] = threading.RLock()
            return self._locks[table_id]

    @contextmanager
    def _mutate(self, table_id: str) -> Iterator[AnnotatedTable]:
        """Load, hand out for mutation, save; no save when the body raises."""
        with self._lock_for(table_id):
            table = self.store.load(table_id)
            yield table
            self.store.save(table)

    # ---- table lifecycle ----

    def import_table(self, data: bytes, table_format: str, name: Optional[str] = None) -> AnnotatedTable:
        """Parse an upload, give it a free id, and persist it."""
        table = tableio.import_table(data, table_format, name)
        base = table.table_id
        suffix = 2
        while self.store.exists(table.table_id):
            table.table_id = f"{base}-{suffix}"
            suffix += 1
        self.store.save(table)
        return table

    def get_table(self, table_id: str) -> AnnotatedTable:
        return self.store.load(table_id)

    def list_tables(self, name_query: str = "") -> list[dict[str, Any]]:
        return self.store.list_tables(name_query)

    def delete_table(self, table_id: str) -> None:
        self.store.delete(table_id)

    def replace_table(self, table_id: str, wrapper_doc: dict[str, Any]) -> AnnotatedTable:
        """Full-document PUT; resets history since old diffs no longer apply."""
        with self._lock_for(table_id):
            self.store.load(table_id)  # must exist
            table = tableio.import_table(tableio.canonical_json(wrapper_doc), tableio.TableFormat.ANNOTATED_JSON)
            table.table_id = table_id
            table.history.clear()
            self.store.save(table)
            return table

    def export_table(self, table_id: str, table_format: str) -> bytes:
        return tableio.export_table(self.store.load(table_id), table_format)

    # ---- local mutations ----

    def apply_edit(self, table_id: str, edit_doc: dict[str, Any]) -> AnnotatedTable:
        edit = edits.edit_from_doc(edit_doc)
        with self._mutate(table_id) as table:
            edits.apply_edit(table, edit)
            return table

    def undo(self, table_id: str) -> AnnotatedTable:
        with self._mutate(table_id) as table:
            history.undo(table)
            return table

    def redo(self, table_id: str) -> AnnotatedTable:
        with self._mutate(table_id) as table:
            history.redo(table)
            return table

    def select_candidate(self, table_id: str, cell_id: str, entity_id: str) -> AnnotatedTable:
        with self._mutate(table_id) as table:
            annotate.select_candidate(table, cell_id, entity_id)
            return table

    def add_candidate(self, table_id: str, cell_id: str, candidate_doc: dict[str, Any]) -> AnnotatedTable:
        candidate = Candidate.from_doc(candidate_doc)
        with self._mutate(table_id) as table:
            annotate.add_manual_candidate(table, cell_id, candidate)
            return table

    def annotate_column(
        self,
        table_id: str,
        column_id: str,
        types: Optional[list[dict[str, Any]]] = None,
        properties: Optional[list[dict[str, Any]]] = None,
        subject: bool = False,
    ) -> AnnotatedTable:
        type_candidates = [Candidate.from_doc(t) for t in (types or [])]
        props = [PropertyAnnotation.from_doc(p) for p in (properties or [])]
        with self._mutate(table_id) as table:
            annotate.annotate_column(table, column_id, type_candidates, props, subject)
            return table

    def refine_column(self, table_id: str, column_id: str, strategy: str, args: dict[str, Any]) -> AnnotatedTable:
        strategy = str(strategy).lower()
        with self._mutate(table_id) as table:
            if strategy == "score":
                if "threshold" not in args:
                    raise ParamValidationError("score refinement needs a threshold")
                refine.refine_by_score(table, column_id, float(args["threshold"]))
            elif strategy == "type":
                types = args.get("types") or []
                if isinstance(types, str):
                    types = [t for t in types.split(",") if t]
                refine.refine_by_type(table, column_id, list(types), by_name=bool(args.get("byName", False)))
            else:
                raise ParamValidationError(f"unknown refine strategy {strategy!r} (use score or type)")
            return table

    # ---- pure queries ----

    def filter_rows(self, table_id: str, filter_doc: dict[str, Any]) -> tuple[list[str], dict[str, list[str]]]:
        table = self.store.load(table_id)
        return refine.filter_rows(table, refine.RowFilter.from_doc(filter_doc))

    def search_cells(self, table_id: str, query: str, search_kind: str) -> list[str]:
        table = self.store.load(table_id)
        return refine.search_cells(table, query, search_kind)

    # ---- service-backed operations ----

    def list_services(self, kind: Optional[str] = None) -> list[dict[str, Any]]:
        kind_filter = ServiceKind(kind.upper()) if kind else None
        return self.registry.list_services(kind_filter)

    def reconcile_column(
        self,
        table_id: str,
        column_id: str,
        service_id: str,
        params: Optional[dict[str, Any]] = None,
    ) -> AnnotatedTable:
        """Reconcile one column; the service roundtrip runs unlocked."""
        with self._lock_for(table_id):
            table = self.store.load(table_id)
            labels = {cell_id: cell.label for cell_id, cell in table.column_cells(column_id)}
        if not labels:
            return table  # nothing to query on a rowless table

        results: dict[str, ReconResult] = {}
        batch_limit = self.registry.client.config.max_batch
        items = list(labels.items())
        for start in range(0, len(items), batch_limit):
            chunk = dict(items[start : start + batch_limit])
            results.update(self.registry.invoke_reconciliation(service_id, chunk, params))

        descriptor = self.registry.get(service_id)
        identifier_space = descriptor.manifest.identifier_space if descriptor.manifest else ""
        with self._mutate(table_id) as table:
            annotate.apply_reconciliation(
                table,
                column_id,
                {cell_id: result.candidates for cell_id, result in results.items()},
                identifier_space,
            )
            return table

    def propose_properties(self, table_id: str, column_id: str, service_id: str) -> list[dict[str, str]]:
        table = self.store.load(table_id)
        pairs = extend.propose_properties(self.registry, service_id, table, column_id)
        return [{"id": pid, "name": name} for pid, name in pairs]

    def extend_column(
        self,
        table_id: str,
        column_id: str,
        service_id: str,
        property_ids: list[str],
        params: Optional[dict[str, Any]] = None,
    ) -> extend.ExtensionOutcome:
        with self._mutate(table_id) as table:
            # The fetch happens inside the table lock on purpose: the row ->
            # entity correspondence must not shift between fetch and apply.
            return extend.extend_column(table, column_id, self.registry, service_id, property_ids, params)

    # ---- bundled services ----

    def register_mock_services(self, kg_url: str, weather_url: str) -> None:
        """Point the registry at a running bundled mock server."""
        self.registry.register(
            "MockKG",
            ServiceKind.RECONCILIATION,
            kg_url,
            params=[
                ParamSpec("type", ParamType.KG_TYPE, required=False),
                ParamSpec("limit", ParamType.NUMBER, required=False),
            ],
        )
        self.registry.register(
            "MockWeather",
            ServiceKind.EXTENSION,
            weather_url,
            params=[],
        )


def table_view(table: AnnotatedTable) -> dict[str, Any]:
    """The response shape every table-returning endpoint uses."""
    return {
        "table": table.to_doc(),
        "stats": table_stats(table).to_doc(),
        "canUndo": bool(table.history.undo_stack),
        "canRedo": bool(table.history.redo_stack),
    }

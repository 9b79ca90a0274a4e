"""Durable table store: one annotated JSON document per table.

Layout inside the store directory:
    <tableId>.json          the annotated wrapper document (lossless)
    <tableId>.history.json  undo/redo sidecar so CLI sessions can undo
    index.json              id -> {name, stats} for fast listing

Every write is write-temp-then-rename, so a crash can never leave a
half-written table behind. Writes are serialized per table id; the
index has its own lock.
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
from pathlib import Path
from typing import Any, Optional

from .errors import StorageError, UnknownTable
from .history import OperationLog
from .model import AnnotatedTable, table_stats
from .tableio import TableFormat, canonical_json, export_annotated, import_table

log = logging.getLogger(__name__)

HISTORY_FORMAT = "annotated-table-history"
_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


def _check_id(table_id: str) -> str:
    # Ids become file names; keep them path-safe.
    if not _ID_PATTERN.match(table_id):
        raise StorageError(f"table id {table_id!r} is not storable", tableId=table_id)
    return table_id


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise StorageError(f"write to {path} failed: {exc}", path=str(path)) from exc


class TableStore:
    """Directory-backed store; safe for concurrent use in one process."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create store directory {directory}: {exc}") from exc
        self._index_lock = threading.Lock()
        self._table_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- paths --

    def table_path(self, table_id: str) -> Path:
        return self.directory / f"{_check_id(table_id)}.json"

    def history_path(self, table_id: str) -> Path:
        return self.directory / f"{_check_id(table_id)}.history.json"

    @property
    def index_path(self) -> Path:
        return self.directory / "index.json"

    def _lock_for(self, table_id: str) -> threading.Lock:
        with self._locks_guard:
            if table_id not in self._table_locks:
                self._table_locks[table_id] = threading.Lock()
            return self._table_locks[table_id]

    # -- index --

    def _read_index(self) -> dict[str, Any]:
        if not self.index_path.exists():
            return {}
        try:
            return json.loads(self.index_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("index unreadable (%s); rebuilding", exc)
            return self._rebuild_index()

    def _rebuild_index(self) -> dict[str, Any]:
        index: dict[str, Any] = {}
        for path in sorted(self.directory.glob("*.json")):
            if path.name == "index.json" or path.name.endswith(".history.json"):
                continue
            try:
                table = self._load_file(path)
            except Exception as exc:  # a corrupt file must not kill listing
                log.warning("skipping unreadable table file %s: %s", path, exc)
                continue
            index[table.table_id] = {"name": table.name, "stats": table_stats(table).to_doc()}
        return index

    def _update_index(self, table_id: str, entry: Optional[dict[str, Any]]) -> None:
        with self._index_lock:
            index = self._read_index()
            if entry is None:
                index.pop(table_id, None)
            else:
                index[table_id] = entry
            _atomic_write(self.index_path, canonical_json(index))

    # -- operations --

    def save(self, table: AnnotatedTable) -> None:
        table_id = _check_id(table.table_id)
        with self._lock_for(table_id):
            _atomic_write(self.table_path(table_id), export_annotated(table))
            history_doc = {
                "format": HISTORY_FORMAT,
                "version": 1,
                "history": table.history.to_doc(),
            }
            _atomic_write(self.history_path(table_id), canonical_json(history_doc))
        self._update_index(table_id, {"name": table.name, "stats": table_stats(table).to_doc()})

    def _load_file(self, path: Path) -> AnnotatedTable:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}", path=str(path)) from exc
        return import_table(data, TableFormat.ANNOTATED_JSON)

    def load(self, table_id: str) -> AnnotatedTable:
        path = self.table_path(table_id)
        if not path.exists():
            raise UnknownTable(f"no stored table with id {table_id!r}", tableId=table_id)
        with self._lock_for(table_id):
            table = self._load_file(path)
            history_file = self.history_path(table_id)
            if history_file.exists():
                try:
                    doc = json.loads(history_file.read_text("utf-8"))
                    table.history = OperationLog.from_doc(doc.get("history", {}))
                except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
                    log.warning("history sidecar for %s unreadable (%s); starting empty", table_id, exc)
                    table.history = OperationLog()
        return table

    def exists(self, table_id: str) -> bool:
        return self.table_path(table_id).exists()

    def list_tables(self, name_query: str = "") -> list[dict[str, Any]]:
        """Summaries for tables whose name contains the query, by id."""
        needle = name_query.lower()
        with self._index_lock:
            index = self._read_index()
        out = []
        for table_id in sorted(index):
            entry = index[table_id]
            if needle and needle not in str(entry.get("name", "")).lower():
                continue
            out.append({"id": table_id, "name": entry.get("name", ""), "stats": entry.get("stats", {})})
        return out

    def delete(self, table_id: str) -> None:
        path = self.table_path(table_id)
        if not path.exists():
            raise UnknownTable(f"no stored table with id {table_id!r}", tableId=table_id)
        with self._lock_for(table_id):
            try:
                path.unlink()
                self.history_path(table_id).unlink(missing_ok=True)
            except OSError as exc:
                raise StorageError(f"delete of {table_id!r} failed: {exc}", tableId=table_id) from exc
        self._update_index(table_id, None)

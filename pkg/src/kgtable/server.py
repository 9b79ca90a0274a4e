"""REST service over the engine: tables, edits, refinement, services, jobs.

Local mutations (edits, refine, select, annotate) answer synchronously;
anything that talks to an external service (reconcile, extend) answers
202 with a job id that the client polls. Job status moves PENDING to
DONE or FAILED exactly once. While a job is in flight its target column
renders with status PENDING so clients can show progress, but the
stored table never contains PENDING.

All errors share the envelope {code, message, details}.
"""

from __future__ import annotations

import itertools
import logging
import socket
import threading
from pathlib import Path
from typing import Any, Optional

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine, table_view
from .errors import (
    ConfigError,
    DuplicateCandidate,
    DuplicateServiceId,
    EmptyHistory,
    KgTableError,
    NoMatchedCells,
    PortBindError,
    PreconditionUnmatchedColumn,
    SERVICE_FAMILY,
    StaleCellId,
    StorageError,
    SubjectConflict,
    UnknownJob,
    VersionMismatch,
)
from .model import AnnotatedTable, MatchStatus

log = logging.getLogger(__name__)

_NOT_FOUND_CODES = {
    "UnknownTable",
    "UnknownColumn",
    "UnknownCell",
    "UnknownCandidate",
    "UnknownService",
    "UnknownJob",
    "UnknownTarget",
    "UnknownTargetColumn",
}

_CONFLICT_TYPES = (
    DuplicateCandidate,
    DuplicateServiceId,
    SubjectConflict,
    StaleCellId,
    VersionMismatch,
    PreconditionUnmatchedColumn,
    NoMatchedCells,
    EmptyHistory,
)


def status_for(exc: KgTableError) -> int:
    if exc.code in _NOT_FOUND_CODES:
        return 404
    if isinstance(exc, _CONFLICT_TYPES):
        return 409
    if isinstance(exc, SERVICE_FAMILY):
        return 502
    if isinstance(exc, (StorageError, ConfigError)):
        return 500
    return 400


# ---- jobs ----

class Job:
    def __init__(self, job_id: str, kind: str, table_id: str, column_id: str):
        self.job_id = job_id
        self.kind = kind
        self.table_id = table_id
        self.column_id = column_id
        self.status = "PENDING"
        self.result: Optional[dict[str, Any]] = None
        self.error: Optional[dict[str, Any]] = None
        self._guard = threading.Lock()

    def finish(self, result: Optional[dict[str, Any]] = None, error: Optional[dict[str, Any]] = None) -> None:
        with self._guard:
            if self.status != "PENDING":
                return  # transitions are monotone; first outcome wins
            if error is not None:
                self.status = "FAILED"
                self.error = error
            else:
                self.status = "DONE"
                self.result = result or {}

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "tableId": self.table_id,
            "columnId": self.column_id,
        }
        if self.result is not None:
            doc["result"] = self.result
        if self.error is not None:
            doc["error"] = self.error
        return doc


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def create(self, kind: str, table_id: str, column_id: str) -> Job:
        with self._lock:
            job = Job(f"job-{next(self._counter)}", kind, table_id, column_id)
            self._jobs[job.job_id] = job
            return job

    def get(self, job_id: str) -> Job:
        job = self._jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"no job with id {job_id!r}", jobId=job_id)
        return job

    def pending_columns(self, table_id: str) -> set[str]:
        return {j.column_id for j in self._jobs.values() if j.table_id == table_id and j.status == "PENDING"}


def overlay_pending(view: dict[str, Any], pending_column_ids: set[str]) -> dict[str, Any]:
    """Paint in-flight columns as PENDING on a response copy only."""
    if not pending_column_ids:
        return view
    doc = view["table"]
    indexes = [i for i, col in enumerate(doc["columns"]) if col["id"] in pending_column_ids]
    if not indexes:
        return view
    counts = {s.value: 0 for s in MatchStatus}
    for row in doc["rows"]:
        for i in indexes:
            row["cells"][i]["status"] = MatchStatus.PENDING.value
        for cell in row["cells"]:
            counts[cell["status"]] += 1
    view["stats"]["statusCounts"] = counts
    return view


# ---- request bodies ----

class ImportBody(BaseModel):
    name: str
    format: str = "csv"
    data: str


class ReconcileBody(BaseModel):
    serviceId: str
    params: dict[str, Any] = {}


class RefineBody(BaseModel):
    strategy: str
    args: dict[str, Any] = {}


class ExtendBody(BaseModel):
    columnId: str
    serviceId: str
    propertyIds: list[str]
    params: dict[str, Any] = {}


class SelectBody(BaseModel):
    entityId: str


class AnnotateBody(BaseModel):
    types: list[dict[str, Any]] = []
    properties: list[dict[str, Any]] = []
    subject: bool = False


class ReloadBody(BaseModel):
    path: Optional[str] = None


# ---- app ----

def create_app(
    engine: Engine,
    services_config: Optional[str] = None,
    static_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="table annotation service", version="0.1.0")
    jobs = JobRegistry()
    app.state.engine = engine
    app.state.jobs = jobs
    app.state.services_config = services_config

    @app.exception_handler(KgTableError)
    async def _engine_error(_request: Request, exc: KgTableError) -> JSONResponse:
        return JSONResponse(status_code=status_for(exc), content=exc.envelope())

    def view_of(table: AnnotatedTable) -> dict[str, Any]:
        return overlay_pending(table_view(table), jobs.pending_columns(table.table_id))

    # -- tables --

    @app.get("/tables")
    def list_tables(name: str = Query(default="")) -> list[dict[str, Any]]:
        return engine.list_tables(name)

    @app.post("/tables", status_code=201)
    def import_table(body: ImportBody) -> dict[str, Any]:
        table = engine.import_table(body.data.encode("utf-8"), body.format, body.name)
        return view_of(table)

    @app.get("/tables/{table_id}")
    def get_table(table_id: str) -> dict[str, Any]:
        return view_of(engine.get_table(table_id))

    @app.put("/tables/{table_id}")
    def put_table(table_id: str, wrapper: dict[str, Any] = Body(...)) -> dict[str, Any]:
        return view_of(engine.replace_table(table_id, wrapper))

    @app.delete("/tables/{table_id}", status_code=204)
    def delete_table(table_id: str) -> Response:
        engine.delete_table(table_id)
        return Response(status_code=204)

    @app.get("/tables/{table_id}/export")
    def export_table(table_id: str, format: str = Query(default="annotated-json")) -> Response:
        payload = engine.export_table(table_id, format)
        media = "text/csv" if format.lower() == "csv" else "application/json"
        return Response(content=payload, media_type=media)

    # -- edits / history --

    @app.post("/tables/{table_id}/edits")
    def apply_edit(table_id: str, edit: dict[str, Any] = Body(...)) -> dict[str, Any]:
        return view_of(engine.apply_edit(table_id, edit))

    @app.post("/tables/{table_id}/edits/undo")
    def undo(table_id: str) -> dict[str, Any]:
        return view_of(engine.undo(table_id))

    @app.post("/tables/{table_id}/edits/redo")
    def redo(table_id: str) -> dict[str, Any]:
        return view_of(engine.redo(table_id))

    # -- cell annotation --

    @app.post("/tables/{table_id}/cells/{cell_id}/select")
    def select_candidate(table_id: str, cell_id: str, body: SelectBody) -> dict[str, Any]:
        return view_of(engine.select_candidate(table_id, cell_id, body.entityId))

    @app.post("/tables/{table_id}/cells/{cell_id}/candidates")
    def add_candidate(table_id: str, cell_id: str, candidate: dict[str, Any] = Body(...)) -> dict[str, Any]:
        return view_of(engine.add_candidate(table_id, cell_id, candidate))

    @app.post("/tables/{table_id}/columns/{column_id}/annotate")
    def annotate_column(table_id: str, column_id: str, body: AnnotateBody) -> dict[str, Any]:
        return view_of(
            engine.annotate_column(table_id, column_id, body.types, body.properties, body.subject)
        )

    @app.post("/tables/{table_id}/columns/{column_id}/refine")
    def refine_column(table_id: str, column_id: str, body: RefineBody) -> dict[str, Any]:
        return view_of(engine.refine_column(table_id, column_id, body.strategy, body.args))

    # -- queries --

    @app.get("/tables/{table_id}/filter")
    def filter_rows(
        table_id: str,
        kind: str = Query(...),
        needle: str = Query(default=""),
        scope: Optional[str] = Query(default=None),
    ) -> dict[str, Any]:
        filter_doc: dict[str, Any] = {"kind": kind, "needle": needle}
        if kind == "STATUS":
            filter_doc["needle"] = [s for s in needle.split(",") if s]
        if scope:
            filter_doc["scope"] = [c for c in scope.split(",") if c]
        rows, highlights = engine.filter_rows(table_id, filter_doc)
        return {"rows": rows, "highlights": highlights}

    @app.get("/tables/{table_id}/search")
    def search_cells(table_id: str, q: str = Query(...), kind: str = Query(default="LABEL")) -> dict[str, Any]:
        return {"cells": engine.search_cells(table_id, q, kind)}

    # -- services --

    @app.get("/services")
    def list_services(kind: Optional[str] = Query(default=None)) -> list[dict[str, Any]]:
        return engine.list_services(kind)

    @app.post("/services/reload")
    def reload_services(body: ReloadBody) -> dict[str, Any]:
        path = body.path or app.state.services_config
        if not path:
            raise ConfigError("no services config path known to this server")
        loaded = engine.registry.load_config(path)
        return {"loaded": loaded}

    @app.get("/tables/{table_id}/columns/{column_id}/propose")
    def propose_properties(table_id: str, column_id: str, serviceId: str = Query(...)) -> dict[str, Any]:
        return {"properties": engine.propose_properties(table_id, column_id, serviceId)}

    # -- async service jobs --

    def _run_job(job: Job, fn, *args: Any) -> None:
        try:
            result = fn(*args)
            job.finish(result=result)
        except KgTableError as exc:
            job.finish(error=exc.envelope())
        except Exception as exc:  # noqa: BLE001 - job must record any failure
            log.exception("job %s crashed", job.job_id)
            job.finish(error={"code": "EngineError", "message": str(exc), "details": {}})

    @app.post("/tables/{table_id}/columns/{column_id}/reconcile", status_code=202)
    def reconcile(table_id: str, column_id: str, body: ReconcileBody) -> dict[str, Any]:
        engine.get_table(table_id).column_index(column_id)  # fail fast on bad ids
        engine.registry.get(body.serviceId)
        job = jobs.create("reconcile", table_id, column_id)

        def work() -> dict[str, Any]:
            engine.reconcile_column(table_id, column_id, body.serviceId, body.params)
            return {"tableId": table_id, "columnId": column_id}

        threading.Thread(target=_run_job, args=(job, work), daemon=True).start()
        return {"jobId": job.job_id}

    @app.post("/tables/{table_id}/extend", status_code=202)
    def extend(table_id: str, body: ExtendBody) -> dict[str, Any]:
        # Check the precondition synchronously so the caller gets the 409.
        table = engine.get_table(table_id)
        from .extend import matched_entities

        if not matched_entities(table, body.columnId):
            raise PreconditionUnmatchedColumn(
                f"column {body.columnId!r} has no reconciled cells to extend from",
                columnId=body.columnId,
            )
        engine.registry.get(body.serviceId)
        job = jobs.create("extend", table_id, body.columnId)

        def work() -> dict[str, Any]:
            outcome = engine.extend_column(table_id, body.columnId, body.serviceId, body.propertyIds, body.params)
            return {"tableId": table_id, **outcome.to_doc()}

        threading.Thread(target=_run_job, args=(job, work), daemon=True).start()
        return {"jobId": job.job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict[str, Any]:
        return jobs.get(job_id).to_doc()

    # -- static UI --

    if static_dir and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def check_port(host: str, port: int) -> None:
    """Raise PortBindError early instead of dying inside the server loop."""
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise PortBindError(f"cannot bind {host}:{port}: {exc}", host=host, port=port) from exc
    finally:
        probe.close()


def run_server(
    engine: Engine,
    host: str = "127.0.0.1",
    port: int = 8765,
    services_config: Optional[str] = None,
    static_dir: Optional[str] = None,
    log_level: str = "info",
) -> None:
    import uvicorn

    check_port(host, port)
    app = create_app(engine, services_config=services_config, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level=log_level)

"""Batch command line over the engine; no running server required.

Exit codes: 0 success, 1 engine error, 2 usage error, 3 file/store
error, 4 network or service error. With --json every stdout line parses
as JSON and diagnostics go to stderr.

Service-backed commands (reconcile, extend) use the services config
file when one is given; otherwise they start the bundled mock services
in-process for the duration of the command.
"""

from __future__ import annotations

import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional

import click

from .engine import Engine, table_view
from .errors import IO_FAMILY, KgTableError, SERVICE_FAMILY, StorageError, UnknownColumn
from .mock_service import MockServiceServer
from .model import AnnotatedTable
from .registry import ServiceRegistry
from .store import TableStore

log = logging.getLogger(__name__)

EXIT_ENGINE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SERVICE = 4


def exit_code_for(exc: KgTableError) -> int:
    if isinstance(exc, SERVICE_FAMILY):
        return EXIT_SERVICE
    if isinstance(exc, IO_FAMILY):
        return EXIT_IO
    return EXIT_ENGINE


@dataclass
class CliState:
    store_dir: str
    services_config: Optional[str]
    json_mode: bool
    _engine: Optional[Engine] = field(default=None, repr=False)

    def engine(self) -> Engine:
        if self._engine is None:
            self._engine = Engine(TableStore(self.store_dir))
        return self._engine

    @contextmanager
    def service_engine(self) -> Iterator[Engine]:
        """Engine with services wired: config file or in-process mocks."""
        engine = self.engine()
        if self.services_config:
            if not engine.registry.list_services():
                engine.registry.load_config(self.services_config)
            yield engine
            return
        with MockServiceServer() as mock:
            fresh = ServiceRegistry(client=engine.registry.client)
            engine.registry = fresh
            engine.register_mock_services(mock.kg_url, mock.weather_url)
            try:
                yield engine
            finally:
                engine.registry = ServiceRegistry(client=engine.registry.client)

    def emit(self, doc: Any, human: str) -> None:
        if self.json_mode:
            click.echo(json.dumps(doc, ensure_ascii=False))
        else:
            click.echo(human)

    def fail(self, exc: KgTableError) -> None:
        diagnostic = json.dumps(exc.envelope(), ensure_ascii=False) if self.json_mode else f"error: {exc.code}: {exc.message}"
        click.echo(diagnostic, err=True)
        sys.exit(exit_code_for(exc))


def _guarded(state: CliState, fn) -> Any:
    try:
        return fn()
    except KgTableError as exc:
        state.fail(exc)


def _resolve_column(table: AnnotatedTable, ref: str) -> str:
    """Accept a column id or a (unique) header as the column reference."""
    ids = {c.column_id for c in table.columns}
    if ref in ids:
        return ref
    matches = [c.column_id for c in table.columns if c.header == ref]
    if len(matches) == 1:
        return matches[0]
    raise UnknownColumn(f"no column with id or unique header {ref!r}", columnRef=ref)


def _summary_line(table: AnnotatedTable) -> str:
    from .model import table_stats

    stats = table_stats(table)
    return f"{table.table_id}: {table.name} ({stats.n_rows} rows x {stats.n_cols} cols)"


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--store-dir", envvar="KGTABLE_STORE_DIR", default="./kgtable-store", show_default=True, help="Table store directory.")
@click.option("--services-config", envvar="KGTABLE_SERVICES_CONFIG", default=None, help="Services config JSON; bundled mocks are used when omitted.")
@click.option("--json", "json_mode", is_flag=True, help="Machine-readable output on stdout.")
@click.option("--log-level", default="warning", show_default=True, help="Python logging level.")
@click.pass_context
def main(ctx: click.Context, store_dir: str, services_config: Optional[str], json_mode: bool, log_level: str) -> None:
    """Annotate, refine, and extend tables against reconciliation services."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING), stream=sys.stderr)
    ctx.obj = CliState(store_dir=store_dir, services_config=services_config, json_mode=json_mode)


@main.command("import")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--format", "table_format", default="csv", show_default=True, help="csv, json, or annotated-json.")
@click.option("--name", default=None, help="Display name; defaults to the file stem.")
@click.pass_obj
def import_cmd(state: CliState, file: Path, table_format: str, name: Optional[str]) -> None:
    """Import a table file into the store."""

    def run() -> None:
        try:
            data = file.read_bytes()
        except OSError as exc:
            raise StorageError(f"cannot read {file}: {exc}", path=str(file)) from exc
        table = state.engine().import_table(data, table_format, name or file.stem)
        state.emit(table_view(table), f"imported {_summary_line(table)}")

    _guarded(state, run)


@main.command("list")
@click.option("--name", default="", help="Case-insensitive name filter.")
@click.pass_obj
def list_cmd(state: CliState, name: str) -> None:
    """List stored tables."""

    def run() -> None:
        summaries = state.engine().list_tables(name)
        if state.json_mode:
            click.echo(json.dumps(summaries, ensure_ascii=False))
        elif not summaries:
            click.echo("no tables")
        else:
            for s in summaries:
                stats = s.get("stats", {})
                click.echo(f"{s['id']}: {s['name']} ({stats.get('nRows', '?')} rows x {stats.get('nCols', '?')} cols)")

    _guarded(state, run)


@main.command("delete")
@click.option("--table", "table_id", required=True)
@click.pass_obj
def delete_cmd(state: CliState, table_id: str) -> None:
    """Delete a stored table."""

    def run() -> None:
        state.engine().delete_table(table_id)
        state.emit({"deleted": table_id}, f"deleted {table_id}")

    _guarded(state, run)


def _parse_params(pairs: tuple[str, ...]) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise click.UsageError(f"--param needs key=value, got {pair!r}")
        value: Any = raw
        try:
            value = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                pass
        params[key] = value
    return params


@main.command("reconcile")
@click.option("--table", "table_id", required=True)
@click.option("--column", "column_ref", required=True, help="Column id or header.")
@click.option("--service", "service_id", required=True)
@click.option("--param", "params", multiple=True, help="Service param as key=value; repeatable.")
@click.pass_obj
def reconcile_cmd(state: CliState, table_id: str, column_ref: str, service_id: str, params: tuple[str, ...]) -> None:
    """Reconcile one column against a registered service."""

    def run() -> None:
        with state.service_engine() as engine:
            column_id = _resolve_column(engine.get_table(table_id), column_ref)
            table = engine.reconcile_column(table_id, column_id, service_id, _parse_params(params))
        state.emit(table_view(table), f"reconciled {column_id} of {_summary_line(table)}")

    _guarded(state, run)


@main.command("refine")
@click.option("--table", "table_id", required=True)
@click.option("--column", "column_ref", required=True)
@click.option("--strategy", type=click.Choice(["score", "type"]), required=True)
@click.option("--threshold", type=float, default=None, help="Score strategy: minimum winning score.")
@click.option("--types", default=None, help="Type strategy: comma-separated accepted type ids.")
@click.option("--by-name", is_flag=True, help="Match types by name substring instead of id.")
@click.pass_obj
def refine_cmd(
    state: CliState,
    table_id: str,
    column_ref: str,
    strategy: str,
    threshold: Optional[float],
    types: Optional[str],
    by_name: bool,
) -> None:
    """Automatically assign matches by score threshold or by type."""
    if strategy == "score" and threshold is None:
        raise click.UsageError("--strategy score requires --threshold")
    if strategy == "type" and not types:
        raise click.UsageError("--strategy type requires --types")

    def run() -> None:
        engine = state.engine()
        column_id = _resolve_column(engine.get_table(table_id), column_ref)
        args: dict[str, Any] = {"threshold": threshold} if strategy == "score" else {"types": types, "byName": by_name}
        table = engine.refine_column(table_id, column_id, strategy, args)
        state.emit(table_view(table), f"refined {column_id} of {_summary_line(table)}")

    _guarded(state, run)


@main.command("extend")
@click.option("--table", "table_id", required=True)
@click.option("--column", "column_ref", required=True)
@click.option("--service", "service_id", required=True)
@click.option("--properties", required=True, help="Comma-separated property ids.")
@click.pass_obj
def extend_cmd(state: CliState, table_id: str, column_ref: str, service_id: str, properties: str) -> None:
    """Append columns fed by an extension service."""

    def run() -> None:
        property_ids = [p for p in properties.split(",") if p]
        with state.service_engine() as engine:
            column_id = _resolve_column(engine.get_table(table_id), column_ref)
            outcome = engine.extend_column(table_id, column_id, service_id, property_ids)
        doc = {**table_view(outcome.table), "extension": outcome.to_doc()}
        human = f"extended {column_id} with {len(outcome.column_ids)} column(s)"
        for warning in outcome.warnings:
            click.echo(f"warning: {warning}", err=True)
        state.emit(doc, human)

    _guarded(state, run)


@main.command("export")
@click.option("--table", "table_id", required=True)
@click.option("--format", "table_format", default="annotated-json", show_default=True, help="csv or annotated-json.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output file; stdout when omitted.")
@click.pass_obj
def export_cmd(state: CliState, table_id: str, table_format: str, out: Optional[Path]) -> None:
    """Export a stored table."""

    def run() -> None:
        payload = state.engine().export_table(table_id, table_format)
        if out is not None:
            try:
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_bytes(payload)
            except OSError as exc:
                raise StorageError(f"cannot write {out}: {exc}", path=str(out)) from exc
            state.emit({"path": str(out), "bytes": len(payload)}, f"wrote {len(payload)} bytes to {out}")
        elif state.json_mode:
            click.echo(json.dumps({"format": table_format, "data": payload.decode("utf-8")}, ensure_ascii=False))
        else:
            sys.stdout.buffer.write(payload)
            sys.stdout.buffer.flush()

    _guarded(state, run)


@main.command("undo")
@click.option("--table", "table_id", required=True)
@click.pass_obj
def undo_cmd(state: CliState, table_id: str) -> None:
    """Undo the most recent operation on a table."""

    def run() -> None:
        table = state.engine().undo(table_id)
        state.emit(table_view(table), f"undid last operation on {table_id}")

    _guarded(state, run)


@main.command("redo")
@click.option("--table", "table_id", required=True)
@click.pass_obj
def redo_cmd(state: CliState, table_id: str) -> None:
    """Redo the most recently undone operation."""

    def run() -> None:
        table = state.engine().redo(table_id)
        state.emit(table_view(table), f"redid last operation on {table_id}")

    _guarded(state, run)


@main.command("report")
@click.option("--table", "table_id", required=True)
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
@click.pass_obj
def report_cmd(state: CliState, table_id: str, out_dir: Path) -> None:
    """Write the CSV export, a stats CSV, and summary figures."""

    def run() -> None:
        from .report import write_report

        table = state.engine().get_table(table_id)
        try:
            written = write_report(table, out_dir)
        except OSError as exc:
            raise StorageError(f"cannot write report to {out_dir}: {exc}", path=str(out_dir)) from exc
        state.emit(written, "\n".join(f"{kind}: {path}" for kind, path in written.items()))

    _guarded(state, run)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--static-dir", default=None, help="Directory of built UI assets to serve at /ui.")
@click.option("--log-level", default="info", show_default=True)
@click.pass_obj
def serve_cmd(state: CliState, host: str, port: int, static_dir: Optional[str], log_level: str) -> None:
    """Run the REST service over this store."""

    def run() -> None:
        from .server import run_server

        engine = state.engine()
        if state.services_config:
            engine.registry.load_config(state.services_config)
        run_server(
            engine,
            host=host,
            port=port,
            services_config=state.services_config,
            static_dir=static_dir,
            log_level=log_level,
        )

    _guarded(state, run)


@main.command("mock-service")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8899, show_default=True)
@click.pass_obj
def mock_service_cmd(state: CliState, host: str, port: int) -> None:
    """Run the bundled mock reconciliation/extension services."""

    def run() -> None:
        try:
            server = MockServiceServer(host=host, port=port)
        except OSError as exc:
            raise StorageError(f"cannot bind {host}:{port}: {exc}") from exc
        server.start()
        state.emit(
            {"kg": server.kg_url, "weather": server.weather_url},
            f"MockKG at {server.kg_url}\nMockWeather at {server.weather_url}\nCtrl-C to stop",
        )
        try:
            while True:
                import time

                time.sleep(3600)
        except KeyboardInterrupt:
            server.stop()

    _guarded(state, run)


if __name__ == "__main__":
    main()

"""Report rendering: delimited outputs plus summary figures.

The report path writes the table's CSV export, a per-column status
breakdown as CSV, and matplotlib figures (status distribution, candidate
score histogram) into one directory. Figures use the Agg backend so
reports render on headless machines.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Any

from .model import AnnotatedTable, MatchStatus, table_stats
from .tableio import export_csv

STATUS_ORDER = [s.value for s in MatchStatus]


def column_status_counts(table: AnnotatedTable) -> list[dict[str, Any]]:
    """Per-column rows: columnId, header, then one count per status."""
    out = []
    for idx, col in enumerate(table.columns):
        counts = {s: 0 for s in STATUS_ORDER}
        for row in table.rows:
            counts[row.cells[idx].status.value] += 1
        out.append({"columnId": col.column_id, "header": col.header, **counts})
    return out


def stats_csv(table: AnnotatedTable) -> bytes:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["columnId", "header", *STATUS_ORDER])
    for entry in column_status_counts(table):
        writer.writerow([entry["columnId"], entry["header"], *(entry[s] for s in STATUS_ORDER)])
    return buffer.getvalue().encode("utf-8")


def _all_scores(table: AnnotatedTable) -> list[float]:
    return [c.score for _r, _col, cell in table.iter_cells() for c in cell.candidates]


def write_report(table: AnnotatedTable, out_dir: str | Path) -> dict[str, str]:
    """Render everything; returns {artifact name: written path}."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, str] = {}

    data_path = out / f"{table.table_id}.csv"
    data_path.write_bytes(export_csv(table))
    written["data"] = str(data_path)

    stats_path = out / f"{table.table_id}_stats.csv"
    stats_path.write_bytes(stats_csv(table))
    written["stats"] = str(stats_path)

    stats = table_stats(table)
    counts = [stats.status_counts.get(MatchStatus(s), 0) for s in STATUS_ORDER]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(STATUS_ORDER, counts, color="#4878a8")
    ax.set_title(f"{table.name}: cell status distribution")
    ax.set_ylabel("cells")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    status_path = out / f"{table.table_id}_status.png"
    fig.savefig(status_path, dpi=100)
    plt.close(fig)
    written["status_figure"] = str(status_path)

    scores = _all_scores(table)
    if scores:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.hist(scores, bins=min(20, max(5, len(set(scores)))), color="#6a9a58", edgecolor="white")
        ax.set_title(f"{table.name}: candidate score distribution")
        ax.set_xlabel("score")
        ax.set_ylabel("candidates")
        fig.tight_layout()
        scores_path = out / f"{table.table_id}_scores.png"
        fig.savefig(scores_path, dpi=100)
        plt.close(fig)
        written["scores_figure"] = str(scores_path)

    return written

/** Table grid renderer with row virtualization.
 *
 * Every row renders when the table is small; past VIRTUAL_THRESHOLD rows
 * only the scrolled-into-view window is materialized between two spacer
 * rows, so huge tables stay responsive.
 */

import { badgeElement } from "./badges.js";
import type { FilterResult, TableView } from "./types.js";
import { cellId } from "./types.js";

export const VIRTUAL_THRESHOLD = 200;
export const ROW_HEIGHT_PX = 28;
const OVERSCAN = 10;

export interface RowWindow {
  start: number;
  end: number; // exclusive
}

/** Pure window computation so virtualization is testable on its own. */
export function visibleWindow(
  totalRows: number,
  scrollTop: number,
  viewportHeight: number,
  rowHeight: number = ROW_HEIGHT_PX,
  overscan: number = OVERSCAN,
): RowWindow {
  if (totalRows <= VIRTUAL_THRESHOLD) {
    return { start: 0, end: totalRows };
  }
  const first = Math.min(Math.floor(scrollTop / rowHeight), totalRows - 1);
  const visible = Math.ceil(viewportHeight / rowHeight);
  const start = Math.max(0, first - overscan);
  const end = Math.min(totalRows, first + visible + overscan);
  return { start, end };
}

export interface GridOptions {
  selectedCellId?: string | null;
  filter?: FilterResult | null;
  scrollTop?: number;
  viewportHeight?: number;
  onCellClick?: (cellId: string) => void;
}

export function renderGrid(container: HTMLElement, view: TableView, options: GridOptions = {}): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("grid-holder");

  const table = doc.createElement("table");
  table.className = "grid";
  const head = doc.createElement("thead");
  const headRow = doc.createElement("tr");
  for (const column of view.table.columns) {
    const th = doc.createElement("th");
    th.dataset.columnId = column.id;
    th.textContent = column.header;
    if (column.role === "SUBJECT") {
      th.classList.add("subject");
    }
    if (column.provenance) {
      th.classList.add("extended");
      th.title = `from ${column.provenance.serviceId}`;
    }
    headRow.appendChild(th);
  }
  head.appendChild(headRow);
  table.appendChild(head);

  const highlights = options.filter?.highlights ?? null;
  const rowFilter = options.filter ? new Set(options.filter.rows) : null;
  const rows = rowFilter
    ? view.table.rows.filter((row) => rowFilter.has(row.id))
    : view.table.rows;

  const window = visibleWindow(
    rows.length,
    options.scrollTop ?? 0,
    options.viewportHeight ?? 600,
  );

  const body = doc.createElement("tbody");
  if (window.start > 0) {
    body.appendChild(spacerRow(doc, view.table.columns.length, window.start));
  }
  for (let index = window.start; index < window.end; index += 1) {
    const row = rows[index];
    const tr = doc.createElement("tr");
    tr.dataset.rowId = row.id;
    row.cells.forEach((cell, columnIndex) => {
      const column = view.table.columns[columnIndex];
      const td = doc.createElement("td");
      const id = cellId(row.id, column.id);
      td.dataset.cellId = id;
      td.dataset.status = cell.status;
      if (options.selectedCellId === id) {
        td.classList.add("selected");
      }
      if (highlights && (highlights[row.id] ?? []).includes(id)) {
        td.classList.add("hit");
      }
      const label = doc.createElement("span");
      label.className = "cell-label";
      label.textContent = cell.label;
      td.appendChild(label);
      td.appendChild(badgeElement(doc, cell.status));
      if (options.onCellClick) {
        td.addEventListener("click", () => options.onCellClick?.(id));
      }
      tr.appendChild(td);
    });
    body.appendChild(tr);
  }
  if (window.end < rows.length) {
    body.appendChild(spacerRow(doc, view.table.columns.length, rows.length - window.end));
  }
  table.appendChild(body);
  container.appendChild(table);
}

function spacerRow(doc: Document, nColumns: number, hiddenRows: number): HTMLTableRowElement {
  const tr = doc.createElement("tr");
  tr.className = "spacer";
  tr.dataset.hiddenRows = String(hiddenRows);
  const td = doc.createElement("td");
  td.colSpan = nColumns;
  td.style.height = `${hiddenRows * ROW_HEIGHT_PX}px`;
  tr.appendChild(td);
  return tr;
}

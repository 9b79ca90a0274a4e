/** Cell inspection panel: label, status, and the candidate list with
 * manual-confirmation buttons. Pure rendering; actions go to handlers. */

import { badgeElement } from "./badges.js";
import type { CellDoc, TableView } from "./types.js";

export interface InspectorHandlers {
  onSelect?: (entityId: string) => void;
}

export function findCell(view: TableView, cellId: string): CellDoc | null {
  const [rowId, columnId] = cellId.split(":");
  const columnIndex = view.table.columns.findIndex((c) => c.id === columnId);
  if (columnIndex < 0) {
    return null;
  }
  const row = view.table.rows.find((r) => r.id === rowId);
  return row ? row.cells[columnIndex] : null;
}

export function renderInspector(
  container: HTMLElement,
  view: TableView,
  cellId: string | null,
  handlers: InspectorHandlers = {},
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("inspector");
  if (!cellId) {
    container.appendChild(note(doc, "select a cell to inspect it"));
    return;
  }
  const cell = findCell(view, cellId);
  if (!cell) {
    container.appendChild(note(doc, `cell ${cellId} is gone`));
    return;
  }

  const heading = doc.createElement("div");
  heading.className = "inspector-heading";
  const label = doc.createElement("strong");
  label.textContent = cell.label || "(empty)";
  heading.appendChild(label);
  heading.appendChild(badgeElement(doc, cell.status));
  const status = doc.createElement("span");
  status.className = "status-name";
  status.textContent = cell.status;
  heading.appendChild(status);
  container.appendChild(heading);

  const list = doc.createElement("ul");
  list.className = "candidates";
  for (const candidate of cell.candidates) {
    const item = doc.createElement("li");
    item.dataset.entityId = candidate.id;
    if (candidate.match) {
      item.classList.add("matched");
    }

    const name = doc.createElement("a");
    name.className = "candidate-name";
    name.textContent = candidate.name;
    name.href = candidate.uri;
    item.appendChild(name);

    const score = doc.createElement("span");
    score.className = "candidate-score";
    score.textContent = candidate.score.toFixed(2);
    item.appendChild(score);

    if (candidate.type.length) {
      const types = doc.createElement("span");
      types.className = "candidate-types";
      types.textContent = candidate.type.map((t) => t.name).join(", ");
      item.appendChild(types);
    }
    if (candidate.description) {
      const description = doc.createElement("span");
      description.className = "candidate-description";
      description.textContent = candidate.description;
      item.appendChild(description);
    }

    const button = doc.createElement("button");
    button.type = "button";
    button.className = "select-candidate";
    button.textContent = candidate.match ? "confirmed" : "confirm";
    button.disabled = candidate.match;
    button.addEventListener("click", () => handlers.onSelect?.(candidate.id));
    item.appendChild(button);

    list.appendChild(item);
  }
  if (!cell.candidates.length) {
    container.appendChild(note(doc, "no candidates"));
  }
  container.appendChild(list);
}

function note(doc: Document, text: string): HTMLElement {
  const p = doc.createElement("p");
  p.className = "note";
  p.textContent = text;
  return p;
}

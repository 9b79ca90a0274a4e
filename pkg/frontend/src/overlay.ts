/** Property-graph overlay: labeled edges for the column relations the
 * table carries (subject/attribute properties and extension provenance). */

import type { TableView } from "./types.js";

export interface EdgeDescriptor {
  fromColumnId: string;
  toColumnId: string;
  label: string;
  matched: boolean;
}

/** Pure extraction of the edges a view implies, in column order. */
export function computeEdges(view: TableView): EdgeDescriptor[] {
  const edges: EdgeDescriptor[] = [];
  for (const column of view.table.columns) {
    for (const property of column.annotation?.properties ?? []) {
      edges.push({
        fromColumnId: column.id,
        toColumnId: property.targetColumnId,
        label: property.name,
        matched: property.match,
      });
    }
  }
  return edges;
}

/** Render the edges as labeled arcs over the column header strip. */
export function renderOverlay(
  svg: SVGSVGElement,
  edges: EdgeDescriptor[],
  columnCenters: Map<string, number>,
): void {
  const doc = svg.ownerDocument;
  const ns = "http://www.w3.org/2000/svg";
  while (svg.firstChild) {
    svg.removeChild(svg.firstChild);
  }
  let lane = 0;
  for (const edge of edges) {
    const from = columnCenters.get(edge.fromColumnId);
    const to = columnCenters.get(edge.toColumnId);
    if (from === undefined || to === undefined) {
      continue;
    }
    lane += 1;
    const y = 8 + lane * 16;
    const group = doc.createElementNS(ns, "g");
    group.setAttribute("class", edge.matched ? "edge matched" : "edge");
    group.setAttribute("data-from", edge.fromColumnId);
    group.setAttribute("data-to", edge.toColumnId);

    const path = doc.createElementNS(ns, "path");
    const middle = (from + to) / 2;
    path.setAttribute("d", `M ${from} ${y} Q ${middle} ${y - 14} ${to} ${y}`);
    group.appendChild(path);

    const text = doc.createElementNS(ns, "text");
    text.setAttribute("x", String(middle));
    text.setAttribute("y", String(y - 6));
    text.textContent = edge.label;
    group.appendChild(text);

    svg.appendChild(group);
  }
  svg.setAttribute("height", String(16 + lane * 16));
}

/** Builders for view documents shaped like the REST service's responses. */

import type {
  CandidateDoc,
  CellDoc,
  ColumnDoc,
  MatchStatus,
  RowDoc,
  TableView,
} from "../src/types.js";

export function candidate(id: string, score: number, match = false): CandidateDoc {
  return {
    id,
    name: id.split(":").pop() ?? id,
    score,
    match,
    type: [{ id: "urn:test:type:Thing", name: "thing" }],
    description: "",
    uri: `https://example.test/${id}`,
  };
}

export function cell(label: string, status: MatchStatus = "NONE", candidates: CandidateDoc[] = []): CellDoc {
  return { label, status, candidates, meta: {} };
}

export interface ViewSpec {
  id?: string;
  name?: string;
  lastModified?: string;
  headers?: string[];
  rows?: CellDoc[][];
  columns?: ColumnDoc[];
  canUndo?: boolean;
  canRedo?: boolean;
}

export function makeView(spec: ViewSpec = {}): TableView {
  const headers = spec.headers ?? ["city"];
  const columns: ColumnDoc[] =
    spec.columns ??
    headers.map((header, i) => ({
      id: `c${i}`,
      header,
      role: "NONE",
      annotation: null,
      provenance: null,
    }));
  const rowCells = spec.rows ?? [[cell("Rome")]];
  const rows: RowDoc[] = rowCells.map((cells, i) => ({ id: `r${i}`, cells }));
  const counts: Record<MatchStatus, number> = {
    NONE: 0,
    PENDING: 0,
    MATCHED_AUTO: 0,
    MATCHED_MANUAL: 0,
    AMBIGUOUS: 0,
  };
  for (const row of rows) {
    for (const c of row.cells) {
      counts[c.status] += 1;
    }
  }
  const lastModified = spec.lastModified ?? "2017-06-09T12:00:00.000000Z";
  return {
    table: {
      id: spec.id ?? "t1",
      name: spec.name ?? "test table",
      lastModified,
      nextRowSeq: rows.length,
      nextColSeq: columns.length,
      columns,
      rows,
    },
    stats: {
      nRows: rows.length,
      nCols: columns.length,
      lastModified,
      statusCounts: counts,
    },
    canUndo: spec.canUndo ?? false,
    canRedo: spec.canRedo ?? false,
  };
}

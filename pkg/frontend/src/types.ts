/** Wire shapes of the kgtable REST service, mirrored one to one. */

export type MatchStatus =
  | "NONE"
  | "PENDING"
  | "MATCHED_AUTO"
  | "MATCHED_MANUAL"
  | "AMBIGUOUS";

export const ALL_STATUSES: readonly MatchStatus[] = [
  "NONE",
  "PENDING",
  "MATCHED_AUTO",
  "MATCHED_MANUAL",
  "AMBIGUOUS",
];

export interface EntityTypeDoc {
  id: string;
  name: string;
}

export interface CandidateDoc {
  id: string;
  name: string;
  score: number;
  match: boolean;
  type: EntityTypeDoc[];
  description: string | null;
  uri: string;
}

export interface CellDoc {
  label: string;
  status: MatchStatus;
  candidates: CandidateDoc[];
  meta: Record<string, unknown>;
}

export interface PropertyAnnotationDoc {
  id: string;
  name: string;
  targetColumnId: string;
  score: number;
  match: boolean;
}

export interface ColumnAnnotationDoc {
  status: MatchStatus;
  types: CandidateDoc[];
  properties: PropertyAnnotationDoc[];
}

export interface ProvenanceDoc {
  serviceId: string;
  sourceColumnId: string;
  propertyId: string;
}

export interface ColumnDoc {
  id: string;
  header: string;
  role: "NONE" | "SUBJECT" | "ATTRIBUTE";
  annotation: ColumnAnnotationDoc | null;
  provenance: ProvenanceDoc | null;
}

export interface RowDoc {
  id: string;
  cells: CellDoc[];
}

export interface TableDoc {
  id: string;
  name: string;
  lastModified: string;
  nextRowSeq: number;
  nextColSeq: number;
  columns: ColumnDoc[];
  rows: RowDoc[];
}

export interface TableStats {
  nRows: number;
  nCols: number;
  lastModified: string;
  statusCounts: Record<MatchStatus, number>;
}

export interface TableView {
  table: TableDoc;
  stats: TableStats;
  canUndo: boolean;
  canRedo: boolean;
}

export interface TableSummary {
  id: string;
  name: string;
  stats: TableStats;
}

export type ParamType = "STRING" | "NUMBER" | "ENUM" | "COLUMN_REF" | "KG_TYPE";

export interface ParamSpecDoc {
  name: string;
  type: ParamType;
  required: boolean;
  enumValues?: string[];
}

export interface ServiceDoc {
  serviceId: string;
  kind: "RECONCILIATION" | "EXTENSION" | "BOTH";
  endpointUrl: string;
  params: ParamSpecDoc[];
  name?: string;
  identifierSpace?: string;
  extendCapability?: boolean;
}

export interface JobDoc {
  id: string;
  kind: string;
  status: "PENDING" | "DONE" | "FAILED";
  tableId: string;
  columnId: string;
  result?: Record<string, unknown>;
  error?: ErrorEnvelope;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export interface FilterResult {
  rows: string[];
  highlights: Record<string, string[]>;
}

export interface ProposedProperty {
  id: string;
  name: string;
}

export function cellId(rowId: string, columnId: string): string {
  return `${rowId}:${columnId}`;
}

/** Composition root: one store, one API client, one render loop.
 *
 * Every user action is a thin method that calls the REST service and
 * applies the returned view (or, for jobs, polls and then re-fetches).
 * The same methods back the toolbar and the scripted UI tests, so the
 * rendered state is always whatever the server last said.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderGrid } from "./grid.js";
import { renderInspector } from "./inspector.js";
import { computeEdges, renderOverlay } from "./overlay.js";
import { UiStore } from "./store.js";
import type { JobDoc, ServiceDoc, TableView } from "./types.js";

export interface App {
  store: UiStore;
  api: ApiClient;
  elements: {
    toolbar: HTMLElement;
    overlay: SVGSVGElement;
    grid: HTMLElement;
    inspector: HTMLElement;
    status: HTMLElement;
  };
  refresh(): Promise<void>;
  openTable(tableId: string): Promise<void>;
  importTable(name: string, format: string, data: string): Promise<void>;
  reconcile(columnId: string, serviceId: string, params?: Record<string, unknown>): Promise<JobDoc>;
  extendColumn(
    columnId: string,
    serviceId: string,
    propertyIds: string[],
    params?: Record<string, unknown>,
  ): Promise<JobDoc>;
  refine(columnId: string, strategy: string, args: Record<string, unknown>): Promise<void>;
  selectCandidate(cellId: string, entityId: string): Promise<void>;
  annotateColumn(columnId: string, body: Record<string, unknown>): Promise<void>;
  applyFilter(kind: string, needle: string, scope?: string[]): Promise<void>;
  clearFilter(): void;
  selectCell(cellId: string | null): void;
  undo(): Promise<void>;
  redo(): Promise<void>;
  listServices(): Promise<ServiceDoc[]>;
}

export function mountApp(root: HTMLElement, api: ApiClient): App {
  const doc = root.ownerDocument;
  const store = new UiStore();

  root.textContent = "";
  root.classList.add("app");
  const toolbar = doc.createElement("header");
  toolbar.className = "toolbar";
  const status = doc.createElement("div");
  status.className = "status-line";
  const overlay = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  overlay.setAttribute("class", "property-overlay");
  const main = doc.createElement("main");
  const grid = doc.createElement("section");
  grid.className = "grid-pane";
  const inspector = doc.createElement("aside");
  inspector.className = "inspector-pane";
  main.append(grid, inspector);
  root.append(toolbar, status, overlay as unknown as Node, main);

  let scrollTop = 0;
  grid.addEventListener("scroll", () => {
    scrollTop = grid.scrollTop;
    render();
  });

  function tableId(): string {
    const view = store.getState().view;
    if (!view) {
      throw new Error("no table is open");
    }
    return view.table.id;
  }

  function render(): void {
    const state = store.getState();
    if (!state.view) {
      grid.textContent = "no table open";
      inspector.textContent = "";
      status.textContent = state.lastError ?? "";
      renderOverlay(overlay, [], new Map());
      return;
    }
    renderGrid(grid, state.view, {
      selectedCellId: state.selectedCellId,
      filter: state.filter,
      scrollTop,
      viewportHeight: grid.clientHeight || 600,
      onCellClick: (id) => store.selectCell(id),
    });
    renderInspector(inspector, state.view, state.selectedCellId, {
      onSelect: (entityId) => {
        const cell = state.selectedCellId;
        if (cell) {
          void actions.selectCandidate(cell, entityId);
        }
      },
    });
    renderOverlay(overlay, computeEdges(state.view), columnCenters(grid));
    renderStatus(state.view);
  }

  function columnCenters(pane: HTMLElement): Map<string, number> {
    const centers = new Map<string, number>();
    const headers = pane.querySelectorAll<HTMLElement>("th[data-column-id]");
    let fallback = 0;
    headers.forEach((th) => {
      const width = th.offsetWidth || 120; // jsdom reports zero layout
      const left = th.offsetLeft || fallback;
      centers.set(th.dataset.columnId!, left + width / 2);
      fallback += width;
    });
    return centers;
  }

  function renderStatus(view: TableView): void {
    const state = store.getState();
    const counts = view.stats.statusCounts;
    const parts = [
      `${view.table.name}: ${view.stats.nRows} rows x ${view.stats.nCols} cols`,
      `matched ${counts.MATCHED_AUTO + counts.MATCHED_MANUAL}`,
      `ambiguous ${counts.AMBIGUOUS}`,
    ];
    if (counts.PENDING > 0 || state.pendingJobId) {
      parts.push("working...");
    }
    if (state.lastError) {
      parts.push(`error: ${state.lastError}`);
    }
    status.textContent = parts.join(" | ");
    status.classList.toggle("error", Boolean(state.lastError));
  }

  async function guarded<T>(work: () => Promise<T>): Promise<T> {
    try {
      return await work();
    } catch (error) {
      store.setError(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
      throw error;
    }
  }

  async function runJob(start: () => Promise<{ jobId: string }>): Promise<JobDoc> {
    return guarded(async () => {
      const { jobId } = await start();
      store.setPendingJob(jobId);
      try {
        // immediate fetch shows the server's PENDING overlay while we poll
        store.applyView(await api.getTable(tableId()));
        const job = await api.pollJob(jobId);
        store.applyView(await api.getTable(tableId()));
        if (job.status === "FAILED") {
          const envelope = job.error ?? { code: "JobFailed", message: "job failed", details: {} };
          throw new ApiError(502, envelope);
        }
        return job;
      } finally {
        store.setPendingJob(null);
      }
    });
  }

  const actions: App = {
    store,
    api,
    elements: { toolbar, overlay, grid, inspector, status },

    refresh: () => guarded(async () => void store.applyView(await api.getTable(tableId()))),
    openTable: (id) => guarded(async () => void store.applyView(await api.getTable(id))),
    importTable: (name, format, data) =>
      guarded(async () => void store.applyView(await api.importTable(name, format, data))),
    reconcile: (columnId, serviceId, params = {}) =>
      runJob(() => api.startReconcile(tableId(), columnId, serviceId, params)),
    extendColumn: (columnId, serviceId, propertyIds, params = {}) =>
      runJob(() => api.startExtend(tableId(), columnId, serviceId, propertyIds, params)),
    refine: (columnId, strategy, args) =>
      guarded(async () => void store.applyView(await api.refineColumn(tableId(), columnId, strategy, args))),
    selectCandidate: (cellId, entityId) =>
      guarded(async () => void store.applyView(await api.selectCandidate(tableId(), cellId, entityId))),
    annotateColumn: (columnId, body) =>
      guarded(async () => void store.applyView(await api.annotateColumn(tableId(), columnId, body))),
    applyFilter: (kind, needle, scope) =>
      guarded(async () => store.setFilter(await api.filterRows(tableId(), kind, needle, scope))),
    clearFilter: () => store.setFilter(null),
    selectCell: (cellId) => store.selectCell(cellId),
    undo: () => guarded(async () => void store.applyView(await api.undo(tableId()))),
    redo: () => guarded(async () => void store.applyView(await api.redo(tableId()))),
    listServices: () => guarded(() => api.listServices()),
  };

  buildToolbar(doc, toolbar, actions);
  store.subscribe(render);
  render();
  return actions;
}

/** Small always-on controls; service dialogs are built on demand. */
function buildToolbar(doc: Document, toolbar: HTMLElement, app: App): void {
  const tablePicker = doc.createElement("select");
  tablePicker.className = "table-picker";
  tablePicker.addEventListener("change", () => {
    if (tablePicker.value) {
      void app.openTable(tablePicker.value);
    }
  });

  const reload = doc.createElement("button");
  reload.textContent = "tables";
  reload.addEventListener("click", () => {
    void app.api.listTables().then((tables) => {
      tablePicker.textContent = "";
      tablePicker.appendChild(new Option("choose a table", ""));
      for (const summary of tables) {
        tablePicker.appendChild(new Option(summary.name, summary.id));
      }
    });
  });

  const undoButton = doc.createElement("button");
  undoButton.textContent = "undo";
  undoButton.addEventListener("click", () => void app.undo().catch(() => undefined));
  const redoButton = doc.createElement("button");
  redoButton.textContent = "redo";
  redoButton.addEventListener("click", () => void app.redo().catch(() => undefined));

  const filterKind = doc.createElement("select");
  for (const kind of ["LABEL_TEXT", "META_NAME", "META_TYPE", "STATUS"]) {
    filterKind.appendChild(new Option(kind, kind));
  }
  const filterNeedle = doc.createElement("input");
  filterNeedle.placeholder = "filter rows";
  const filterApply = doc.createElement("button");
  filterApply.textContent = "filter";
  filterApply.addEventListener("click", () => {
    void app.applyFilter(filterKind.value, filterNeedle.value).catch(() => undefined);
  });
  const filterClear = doc.createElement("button");
  filterClear.textContent = "clear";
  filterClear.addEventListener("click", () => app.clearFilter());

  toolbar.append(reload, tablePicker, undoButton, redoButton, filterKind, filterNeedle, filterApply, filterClear);
}

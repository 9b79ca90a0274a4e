/** Single-loop UI state container.
 *
 * All mutations funnel through one store; refreshes are last-write-wins,
 * keyed by the table's lastModified stamp, so a slow stale response can
 * never overwrite a newer view.
 */

import type { FilterResult, TableView } from "./types.js";

export interface UiState {
  view: TableView | null;
  selectedCellId: string | null;
  filter: FilterResult | null;
  pendingJobId: string | null;
  lastError: string | null;
}

export type Listener = (state: UiState) => void;

export class UiStore {
  private state: UiState = {
    view: null,
    selectedCellId: null,
    filter: null,
    pendingJobId: null,
    lastError: null,
  };
  private listeners: Listener[] = [];

  getState(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Apply a fetched view; stale responses lose. Returns whether applied. */
  applyView(view: TableView): boolean {
    const current = this.state.view;
    if (
      current &&
      current.table.id === view.table.id &&
      view.table.lastModified < current.table.lastModified
    ) {
      return false;
    }
    const sameTable = current?.table.id === view.table.id;
    this.state = {
      ...this.state,
      view,
      // selection and filter are per-table transients
      selectedCellId: sameTable ? this.state.selectedCellId : null,
      filter: sameTable ? this.state.filter : null,
      lastError: null,
    };
    this.emit();
    return true;
  }

  clearView(): void {
    this.state = { ...this.state, view: null, selectedCellId: null, filter: null };
    this.emit();
  }

  selectCell(cellId: string | null): void {
    this.state = { ...this.state, selectedCellId: cellId };
    this.emit();
  }

  setFilter(filter: FilterResult | null): void {
    this.state = { ...this.state, filter };
    this.emit();
  }

  setPendingJob(jobId: string | null): void {
    this.state = { ...this.state, pendingJobId: jobId };
    this.emit();
  }

  setError(message: string | null): void {
    this.state = { ...this.state, lastError: message };
    this.emit();
  }
}

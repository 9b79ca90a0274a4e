/** End-to-end UI fidelity against a live REST service.
 *
 * Spawns the bundled mock services and the REST server as real processes,
 * mounts the app in jsdom, drives it through scripted user actions, and
 * after every action verifies that the rendered badge, edge, and row state
 * equals the state recomputed from a fresh GET. Also checks that service
 * dialogs render exactly the parameter specs the server advertises.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { mountApp, type App } from "../src/app.js";
import { badgeColor } from "../src/badges.js";
import { buildServiceForm } from "../src/forms.js";
import { computeEdges } from "../src/overlay.js";
import { cellId } from "../src/types.js";
import { makeView } from "./helpers.js";

const CAPITALS_CSV = "City,Country\nRome,Italy\nParis,France\nBerlin,Germany\nLyon,France\nAtlantis,Unknown\n";
const CLUB_TYPE = "urn:mock:type:AssociationFootballClub";

let mock: ChildProcess;
let server: ChildProcess;
let serverUrl = "";
let workDir = "";
const logs: string[] = [];

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        probe.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

function launch(args: string[]): ChildProcess {
  const child = spawn("kgtable", args, { stdio: ["ignore", "pipe", "pipe"] });
  child.stdout?.on("data", (chunk: Buffer) => logs.push(chunk.toString()));
  child.stderr?.on("data", (chunk: Buffer) => logs.push(chunk.toString()));
  return child;
}

async function waitForHttp(url: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(url);
      if (response.ok) {
        return;
      }
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service at ${url} never came up\n${logs.join("")}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

async function waitFor(predicate: () => boolean, what: string, timeoutMs = 15_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "kgtable-ui-"));
  const mockPort = await freePort();
  const serverPort = await freePort();
  serverUrl = `http://127.0.0.1:${serverPort}`;

  mock = launch(["mock-service", "--port", String(mockPort)]);
  await waitForHttp(`http://127.0.0.1:${mockPort}/mockkg`);

  const services = [
    {
      serviceId: "MockKG",
      kind: "RECONCILIATION",
      endpointUrl: `http://127.0.0.1:${mockPort}/mockkg`,
      params: [
        { name: "type", type: "KG_TYPE", required: false },
        { name: "limit", type: "NUMBER", required: false },
      ],
    },
    {
      serviceId: "MockKGStrict",
      kind: "RECONCILIATION",
      endpointUrl: `http://127.0.0.1:${mockPort}/mockkg`,
      params: [{ name: "type", type: "KG_TYPE", required: true }],
    },
    {
      serviceId: "MockWeather",
      kind: "EXTENSION",
      endpointUrl: `http://127.0.0.1:${mockPort}/mockweather`,
      params: [],
    },
  ];
  const configPath = join(workDir, "services.json");
  writeFileSync(configPath, JSON.stringify(services, null, 2));

  server = launch([
    "--store-dir",
    join(workDir, "store"),
    "--services-config",
    configPath,
    "serve",
    "--port",
    String(serverPort),
  ]);
  await waitForHttp(`${serverUrl}/tables`);
});

afterAll(() => {
  server?.kill();
  mock?.kill();
  if (workDir) {
    rmSync(workDir, { recursive: true, force: true });
  }
});

function mount(): App {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return mountApp(root, new ApiClient(serverUrl));
}

function hexToRgb(hex: string): string {
  const n = parseInt(hex.slice(1), 16);
  return `rgb(${(n >> 16) & 255}, ${(n >> 8) & 255}, ${n & 255})`;
}

/** Rendered badge/edge/row state must equal state recomputed from a fresh GET. */
async function expectFidelity(
  app: App,
  verifier: ApiClient,
  activeFilter?: { kind: string; needle: string },
): Promise<void> {
  const current = app.store.getState().view;
  expect(current).not.toBeNull();
  const fresh = await verifier.getTable(current!.table.id);

  // column headers: one th per column, provenance marked
  const headers = [...app.elements.grid.querySelectorAll<HTMLElement>("th[data-column-id]")];
  expect(headers.map((th) => th.dataset.columnId)).toEqual(fresh.table.columns.map((c) => c.id));
  for (const column of fresh.table.columns) {
    const th = headers.find((h) => h.dataset.columnId === column.id)!;
    expect(th.textContent).toBe(column.header);
    expect(th.classList.contains("extended")).toBe(column.provenance !== null);
  }

  // row set: the filtered view must equal a server-recomputed filter
  let expectedRowIds = fresh.table.rows.map((row) => row.id);
  if (activeFilter) {
    const recomputed = await verifier.filterRows(current!.table.id, activeFilter.kind, activeFilter.needle);
    expectedRowIds = recomputed.rows;
  }
  const renderedRowIds = [...app.elements.grid.querySelectorAll<HTMLElement>("tbody tr[data-row-id]")].map(
    (tr) => tr.dataset.rowId,
  );
  expect(renderedRowIds).toEqual(expectedRowIds);

  // cell badges: status and color equal the fresh server state
  for (const row of fresh.table.rows) {
    if (!expectedRowIds.includes(row.id)) {
      continue;
    }
    row.cells.forEach((cell, columnIndex) => {
      const id = cellId(row.id, fresh.table.columns[columnIndex].id);
      const td = app.elements.grid.querySelector<HTMLElement>(`td[data-cell-id='${id}']`);
      expect(td, `cell ${id} should be rendered`).not.toBeNull();
      expect(td!.dataset.status, `status of ${id}`).toBe(cell.status);
      expect(td!.querySelector<HTMLElement>(".cell-label")?.textContent).toBe(cell.label);
      const badge = td!.querySelector<HTMLElement>(".badge");
      expect(badge?.dataset.status, `badge of ${id}`).toBe(cell.status);
      expect(badge?.style.backgroundColor).toBe(hexToRgb(badgeColor(cell.status)));
    });
  }

  // property edges: the overlay must equal edges derived from the fresh view
  const renderedEdges = [...app.elements.overlay.querySelectorAll("g.edge")].map((group) => ({
    fromColumnId: group.getAttribute("data-from"),
    toColumnId: group.getAttribute("data-to"),
    label: group.querySelector("text")?.textContent ?? "",
    matched: group.getAttribute("class")!.includes("matched"),
  }));
  expect(renderedEdges).toEqual(computeEdges(fresh));
}

describe("scenario: ambiguous club label", () => {
  it("mirrors the server after import, reconcile, refine, and manual selection", async () => {
    const app = mount();
    const verifier = new ApiClient(serverUrl);

    await app.importTable("clubs", "CSV", "Club\nBournemouth\n");
    const tableId = app.store.getState().view!.table.id;
    await expectFidelity(app, verifier);

    const job = await app.reconcile("c0", "MockKG");
    expect(job.status).toBe("DONE");
    const target = cellId("r0", "c0");
    expect(app.store.getState().view!.table.rows[0].cells[0].status).toBe("AMBIGUOUS");
    await expectFidelity(app, verifier);

    // inspect the ambiguous cell: candidate list equals the fresh server state
    app.selectCell(target);
    const freshCell = (await verifier.getTable(tableId)).table.rows[0].cells[0];
    expect(freshCell.candidates.length).toBeGreaterThanOrEqual(2);
    const items = [...app.elements.inspector.querySelectorAll<HTMLElement>("li[data-entity-id]")];
    expect(items.map((li) => li.dataset.entityId)).toEqual(freshCell.candidates.map((c) => c.id));

    await app.refine("c0", "type", { types: [CLUB_TYPE] });
    const refined = app.store.getState().view!.table.rows[0].cells[0];
    expect(refined.status).toBe("MATCHED_AUTO");
    expect(refined.candidates.filter((c) => c.match).map((c) => c.id)).toEqual(["urn:mock:AFC_Bournemouth"]);
    await expectFidelity(app, verifier);

    // click the other candidate's confirm button: a manual override
    const other = [...app.elements.inspector.querySelectorAll<HTMLElement>("li[data-entity-id]")].find(
      (li) => li.dataset.entityId !== "urn:mock:AFC_Bournemouth",
    );
    expect(other).toBeDefined();
    const otherId = other!.dataset.entityId!;
    other!.querySelector<HTMLButtonElement>("button.select-candidate")!.click();
    await waitFor(
      () => app.store.getState().view!.table.rows[0].cells[0].status === "MATCHED_MANUAL",
      "manual selection to land",
    );
    const manual = app.store.getState().view!.table.rows[0].cells[0];
    expect(manual.candidates.filter((c) => c.match).map((c) => c.id)).toEqual([otherId]);
    await expectFidelity(app, verifier);
  });
});

describe("scenario: capitals enrichment", () => {
  it("mirrors the server after reconcile, extend, filter, undo, and redo", async () => {
    const app = mount();
    const verifier = new ApiClient(serverUrl);

    await app.importTable("capitals", "CSV", CAPITALS_CSV);
    await expectFidelity(app, verifier);

    const reconJob = await app.reconcile("c0", "MockKG");
    expect(reconJob.status).toBe("DONE");
    const statuses = app.store.getState().view!.table.rows.map((row) => row.cells[0].status);
    expect(statuses).toEqual(["MATCHED_AUTO", "MATCHED_AUTO", "MATCHED_AUTO", "AMBIGUOUS", "NONE"]);
    await expectFidelity(app, verifier);

    const extendJob = await app.extendColumn("c0", "MockWeather", ["weather"]);
    expect(extendJob.status).toBe("DONE");
    const extended = app.store.getState().view!;
    // extension columns insert right after their source column
    expect(extended.table.columns.map((c) => c.header)).toEqual(["City", "weather", "Country"]);
    const weatherColumn = extended.table.columns[1];
    expect(weatherColumn.provenance?.serviceId).toBe("MockWeather");
    // the overlay now shows the property edge into the new column
    expect(app.elements.overlay.querySelectorAll("g.edge").length).toBeGreaterThan(0);
    await expectFidelity(app, verifier);

    // weather cells are filled exactly for the matched rows
    const matchedRows = extended.table.rows.filter((row) =>
      ["MATCHED_AUTO", "MATCHED_MANUAL"].includes(row.cells[0].status),
    );
    for (const row of extended.table.rows) {
      const filled = row.cells[1].label !== "";
      expect(filled).toBe(matchedRows.includes(row));
    }

    await app.applyFilter("LABEL_TEXT", "berlin");
    expect(app.store.getState().filter?.rows).toEqual(["r2"]);
    await expectFidelity(app, verifier, { kind: "LABEL_TEXT", needle: "berlin" });
    const hit = app.elements.grid.querySelector<HTMLElement>("td.hit");
    expect(hit?.dataset.cellId).toBe(cellId("r2", "c0"));

    app.clearFilter();
    await expectFidelity(app, verifier);

    await app.undo();
    expect(app.store.getState().view!.table.columns.length).toBe(2);
    await expectFidelity(app, verifier);

    await app.redo();
    const redone = app.store.getState().view!;
    expect(redone.table.columns.map((c) => c.header)).toEqual(["City", "weather", "Country"]);
    await expectFidelity(app, verifier);
  });
});

describe("service dialogs", () => {
  it("renders exactly the advertised parameter specs for every service", async () => {
    const verifier = new ApiClient(serverUrl);
    const services = await verifier.listServices();
    const byId = new Map(services.map((s) => [s.serviceId, s]));
    expect([...byId.keys()].sort()).toEqual(["MockKG", "MockKGStrict", "MockWeather"]);

    const kg = byId.get("MockKG")!;
    expect(kg.params.map((p) => [p.name, p.type, p.required])).toEqual([
      ["type", "KG_TYPE", false],
      ["limit", "NUMBER", false],
    ]);
    const weather = byId.get("MockWeather")!;
    expect(weather.params).toEqual([]);

    // field set identical to the served params for each dialog: no extras, none missing
    for (const service of services) {
      const handle = buildServiceForm(document, service, makeView(), () => undefined);
      const rendered = [...handle.element.querySelectorAll<HTMLElement>("label.param")];
      expect(rendered.map((el) => el.dataset.param)).toEqual(service.params.map((p) => p.name));
    }
  });

  it("blocks submission until served required fields are filled", async () => {
    const verifier = new ApiClient(serverUrl);
    const services = await verifier.listServices();
    const strict = services.find((s) => s.serviceId === "MockKGStrict")!;
    expect(strict.params.some((p) => p.required)).toBe(true);

    let submitted: Record<string, unknown> | null = null;
    const handle = buildServiceForm(document, strict, makeView(), (values) => {
      submitted = values;
    });
    handle.element.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(submitted).toBeNull();
    expect(handle.element.classList.contains("invalid")).toBe(true);
    expect(handle.element.querySelector(".form-errors")?.textContent).toContain("type");

    const input = handle.element.querySelector<HTMLInputElement>("[data-param='type'] input")!;
    input.value = CLUB_TYPE;
    handle.element.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(submitted).toEqual({ type: CLUB_TYPE });
  });
});

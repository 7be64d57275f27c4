import { ApiError, Client } from "./api.js";
import { chartGeometry, chartSvg, type ChartSpec } from "./charts.js";
import { sceneSvg } from "./netview.js";
import { PANEL_FIELDS, validatePatch, validateStepCount } from "./panel.js";
import { Store, type Series } from "./store.js";

const client = new Client("");
const store = new Store();
let runId = "";

// Single update queue: every protocol response is folded into the store
// from here, one at a time, so renders never see interleaved state.
const queue: (() => Promise<void>)[] = [];
let draining = false;

function enqueue(task: () => Promise<void>): void {
  queue.push(task);
  if (!draining) void drain();
}

async function drain(): Promise<void> {
  draining = true;
  while (queue.length) {
    const task = queue.shift()!;
    try {
      await task();
    } catch (err) {
      if (err instanceof ApiError && Object.keys(err.errors).length) {
        store.patchRejected(err.errors);
      } else {
        store.setBanner(err instanceof Error ? err.message : String(err));
      }
    }
  }
  draining = false;
}

/** Refresh state; when its embedded record is ahead of the series, backfill
 * the gap from the records endpoint first. */
async function syncState(): Promise<void> {
  let state = await client.getState(runId);
  if (store.applyState(state) === "gap") {
    const records = await client.getRecords(runId, store.nextGeneration());
    for (const rec of records) store.applyRecord(rec);
    store.applyState(state);
  }
}

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const CHART_SPEC: ChartSpec = { width: 420, height: 160, pad: 30 };
const CHARTS: { id: string; key: keyof Series; title: string }[] = [
  { id: "chart-fitness", key: "fitness", title: "fitness" },
  { id: "chart-pleiotropy", key: "pleiotropy", title: "pleiotropy" },
  { id: "chart-redundancy", key: "redundancy", title: "redundancy" },
];

function buildPanel(): void {
  const form = el<HTMLFormElement>("config-fields");
  form.innerHTML = PANEL_FIELDS.map(
    (f) => `
    <label class="field">
      <span>${f.label}</span>
      <input name="${f.name}" type="number" step="any" placeholder="">
      <em class="field-error" data-for="${f.name}"></em>
    </label>`,
  ).join("");
}

function collectPatch(): Record<string, number> {
  const fields: Record<string, number> = {};
  for (const spec of PANEL_FIELDS) {
    const input = document.querySelector<HTMLInputElement>(`input[name="${spec.name}"]`);
    if (input && input.value.trim() !== "") fields[spec.name] = Number(input.value);
  }
  return fields;
}

function render(): void {
  const state = store.session;
  el("run-id").textContent = runId ? `session ${runId}` : "connecting";
  el("mode").textContent = state ? state.mode : "-";
  el("mode").className = `badge ${state ? state.mode : ""}`;
  el("generation").textContent = state
    ? `generation ${state.current_generation} / ${state.live_config.generations}`
    : "";

  for (const chart of CHARTS) {
    const svg = el(chart.id);
    const values = store.series[chart.key] as number[];
    const geom = chartGeometry(store.series.generation, values, CHART_SPEC, store.series.converged);
    svg.innerHTML = chartSvg(geom, CHART_SPEC);
    const latest = values[values.length - 1];
    el(`${chart.id}-value`).textContent = latest === undefined ? "" : `= ${latest.toPrecision(6)}`;
  }

  const network = el("network");
  if (store.scene) {
    network.setAttribute("viewBox", `0 0 ${store.scene.width} ${store.scene.height}`);
    network.innerHTML = sceneSvg(store.scene);
  }
  el("network-meta").textContent = store.sceneDigest
    ? `elite ${store.sceneDigest.slice(0, 12)}${store.networkStale ? " (refreshing)" : ""}`
    : "";

  const banner = el("banner");
  banner.textContent = store.banner ?? "";
  banner.hidden = !store.banner;

  for (const spec of PANEL_FIELDS) {
    const slot = document.querySelector<HTMLElement>(`.field-error[data-for="${spec.name}"]`);
    if (slot) slot.textContent = store.fieldErrors[spec.name] ?? "";
    const input = document.querySelector<HTMLInputElement>(`input[name="${spec.name}"]`);
    if (input && state && document.activeElement !== input) {
      input.placeholder = String((state.live_config as unknown as Record<string, number>)[spec.name]);
    }
  }
  const note = el("patch-note");
  if (store.pending) {
    note.textContent = `applies at generation ${store.pending.sentAtGeneration + 1}`;
  } else {
    note.textContent = "";
  }

  const finished = state?.mode === "finished";
  el<HTMLButtonElement>("btn-pause").toggleAttribute("disabled", state?.mode !== "running");
  el<HTMLButtonElement>("btn-resume").toggleAttribute("disabled", state?.mode !== "paused");
  el<HTMLButtonElement>("btn-step").toggleAttribute("disabled", state?.mode !== "paused");
  el<HTMLButtonElement>("btn-apply").toggleAttribute("disabled", !!finished);
}

function wireControls(): void {
  el("btn-pause").addEventListener("click", () => {
    enqueue(async () => {
      store.applyState(await client.pause(runId));
    });
  });
  el("btn-resume").addEventListener("click", () => {
    enqueue(async () => {
      store.applyState(await client.resume(runId));
    });
  });
  el("btn-step").addEventListener("click", () => {
    const n = Number(el<HTMLInputElement>("step-count").value || "1");
    const bad = validateStepCount(n);
    if (bad) {
      store.setFieldErrors({ step: bad });
      el("step-error").textContent = bad;
      return;
    }
    el("step-error").textContent = "";
    enqueue(async () => {
      await client.step(runId, n);
      await syncState();
    });
  });
  el("btn-apply").addEventListener("click", (ev) => {
    ev.preventDefault();
    const state = store.session;
    if (!state) return;
    const fields = collectPatch();
    if (!Object.keys(fields).length) return;
    const errors = validatePatch(fields, state.live_config);
    if (Object.keys(errors).length) {
      store.setFieldErrors(errors); // invalid: no request leaves the client
      return;
    }
    store.beginPatch(fields);
    enqueue(async () => {
      store.applyState(await client.patchConfig(runId, fields));
    });
  });
}

async function boot(): Promise<void> {
  buildPanel();
  wireControls();
  store.onChange(() => requestAnimationFrame(render));

  const fromUrl = new URLSearchParams(location.search).get("session");
  if (fromUrl) {
    runId = fromUrl;
  } else {
    const created = await client.createSession({});
    runId = created.run_id;
    history.replaceState(null, "", `?session=${runId}`);
  }

  // hydrate the full history first, then the live snapshot: a reload
  // rebuilds the identical view model from the poll endpoints alone
  const records = await client.getRecords(runId, 1);
  enqueue(async () => {
    for (const rec of records) store.applyRecord(rec);
    await syncState();
  });

  // one stream subscription for the session's whole life; each record also
  // schedules a state refresh so the network pane tracks the newest digest
  void client.streamRecords(runId, store.nextGeneration(), (rec) => {
    enqueue(async () => {
      if (store.applyRecord(rec) === "gap") {
        const missing = await client.getRecords(runId, store.nextGeneration());
        for (const m of missing) store.applyRecord(m);
      }
      await syncState();
    });
  });

  render();
}

boot().catch((err) => {
  store.setBanner(err instanceof Error ? err.message : String(err));
  render();
});

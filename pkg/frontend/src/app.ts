/**
 * DOM wiring: binds the pure state/render modules to the browser.
 *
 * Data flows one way: events update the ViewState, the state is pushed into
 * the URL, and the view re-renders from cached or freshly fetched payloads.
 * Fetches carry a request token per view slot; responses arriving for a
 * stale token are dropped (last-write-wins), so slow requests can never
 * clobber a newer view.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  INITIAL_STATE,
  ViewState,
  closeDrill,
  drillPage,
  fromQuery,
  openDrill,
  toQuery,
  toggleSystem,
  withMetric,
  withSystems,
} from "./state.js";
import {
  renderComparisonView,
  renderDrillDown,
  renderErrorBanner,
  renderSingleView,
  renderSystemList,
} from "./render.js";
import type { ComparisonReport, SingleAnalysisReport, SystemEntry } from "./types.js";

const api = new ApiClient("");

let state: ViewState = INITIAL_STATE;
let entries: SystemEntry[] = [];
// reports cached per system id; metric switches re-render without refetching
const reportCache = new Map<string, SingleAnalysisReport>();
let comparison: ComparisonReport | null = null;
const tokens = new Map<string, number>();

function nextToken(slot: string): number {
  const token = (tokens.get(slot) ?? 0) + 1;
  tokens.set(slot, token);
  return token;
}

function isCurrent(slot: string, token: number): boolean {
  return tokens.get(slot) === token;
}

function mount(html: string): void {
  const root = document.getElementById("app");
  if (root) root.innerHTML = html;
}

function mountDrill(html: string): void {
  const slot = document.getElementById("drill");
  if (slot) slot.innerHTML = html;
}

function showError(err: unknown): void {
  const banner =
    err instanceof ApiError
      ? renderErrorBanner(err.code, err.message)
      : renderErrorBanner("error", String(err));
  const slot = document.getElementById("banner");
  if (slot) slot.innerHTML = banner;
}

function clearError(): void {
  const slot = document.getElementById("banner");
  if (slot) slot.innerHTML = "";
}

function pushUrl(): void {
  history.pushState(null, "", "?" + toQuery(state));
}

async function renderCurrentView(): Promise<void> {
  clearError();
  if (state.view === "systems" || state.systems.length === 0) {
    const token = nextToken("main");
    try {
      entries = await api.listSystems();
      if (!isCurrent("main", token)) return;
      mount(renderSystemList(entries, state.systems));
    } catch (err) {
      showError(err);
    }
    return;
  }
  if (state.view === "single") {
    const id = state.systems[0];
    const cached = reportCache.get(id);
    if (cached) {
      mount(renderSingleView(cached, state));
      return;
    }
    const token = nextToken("main");
    try {
      const report = await api.getAnalysis(id, { ci: state.ci });
      if (!isCurrent("main", token)) return;
      reportCache.set(id, report);
      mount(renderSingleView(report, state));
    } catch (err) {
      showError(err);
    }
    return;
  }
  // compare: the ranking table depends on the metric, so fetch per metric
  const token = nextToken("main");
  try {
    comparison = await api.compare(state.systems, state.metric, { ci: state.ci });
    if (!isCurrent("main", token)) return;
    mount(renderComparisonView(comparison));
  } catch (err) {
    showError(err); // 409 comparability errors surface verbatim here
  }
}

async function renderDrillSlot(): Promise<void> {
  if (!state.drill || state.systems.length === 0) {
    mountDrill("");
    return;
  }
  const token = nextToken("drill");
  try {
    const page = await api.bucketExamples(
      state.systems[0],
      state.drill.feature,
      state.drill.label,
      state.drill.offset,
      state.drill.limit,
    );
    if (!isCurrent("drill", token)) return;
    mountDrill(renderDrillDown(page));
  } catch (err) {
    showError(err);
  }
}

function update(next: ViewState, push = true): void {
  state = next;
  if (push) pushUrl();
  void renderCurrentView();
  void renderDrillSlot();
}

async function handleUpload(): Promise<void> {
  const box = document.getElementById("upload-text") as HTMLTextAreaElement | null;
  if (!box || !box.value.trim()) return;
  try {
    const { id } = await api.upload(box.value);
    reportCache.clear();
    update(withSystems(state, [id]));
  } catch (err) {
    showError(err);
  }
}

function handleClick(event: Event): void {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement)) return;
  const action = target.dataset.action;
  switch (action) {
    case "metric":
      // re-render from cache; no reload, no refetch for single view
      update(withMetric(state, target.dataset.metric ?? state.metric));
      break;
    case "toggle-system":
      state = toggleSystem(state, target.dataset.id ?? "");
      pushUrl();
      break;
    case "analyze":
      update(withSystems(state, state.systems));
      break;
    case "drill":
      update(openDrill(state, target.dataset.feature ?? "", target.dataset.label ?? ""));
      break;
    case "drill-page":
      update(drillPage(state, Number(target.dataset.delta ?? 1)));
      break;
    case "close-drill":
      update(closeDrill(state));
      break;
    case "upload":
      void handleUpload();
      break;
  }
}

export function start(): void {
  state = fromQuery(location.search);
  document.addEventListener("click", handleClick);
  window.addEventListener("popstate", () => {
    state = fromQuery(location.search);
    void renderCurrentView();
    void renderDrillSlot();
  });
  void renderCurrentView();
  void renderDrillSlot();
}

start();

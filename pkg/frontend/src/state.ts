/**
 * View state and its URL serialization.
 *
 * Every view is reachable by URL: the state round-trips through the query
 * string, so an analysis can be shared by copying the address bar. State
 * transitions are pure functions; switching the metric produces a new state
 * that re-renders from the already-fetched report (no reload).
 */

export type ViewKind = "systems" | "single" | "compare";
export type CiChoice = "bootstrap" | "ttest" | "none";

export interface DrillTarget {
  feature: string;
  label: string;
  offset: number;
  limit: number;
}

export interface ViewState {
  view: ViewKind;
  systems: string[]; // selected system ids
  metric: string;
  ci: CiChoice;
  drill: DrillTarget | null;
}

export const SUPPORTED_METRICS = ["hits@1", "hits@5", "hits@10", "mrr", "mr"];

export const INITIAL_STATE: ViewState = {
  view: "systems",
  systems: [],
  metric: "mrr",
  ci: "bootstrap",
  drill: null,
};

export function withView(state: ViewState, view: ViewKind): ViewState {
  return { ...state, view, drill: null };
}

export function withMetric(state: ViewState, metric: string): ViewState {
  if (!SUPPORTED_METRICS.includes(metric)) return state;
  return { ...state, metric };
}

export function withSystems(state: ViewState, systems: string[]): ViewState {
  const view: ViewKind =
    systems.length === 0 ? "systems" : systems.length === 1 ? "single" : "compare";
  return { ...state, systems, view, drill: null };
}

export function toggleSystem(state: ViewState, id: string): ViewState {
  const systems = state.systems.includes(id)
    ? state.systems.filter((s) => s !== id)
    : [...state.systems, id];
  return { ...state, systems };
}

export function withCi(state: ViewState, ci: CiChoice): ViewState {
  return { ...state, ci };
}

export function openDrill(state: ViewState, feature: string, label: string): ViewState {
  return { ...state, drill: { feature, label, offset: 0, limit: 20 } };
}

export function drillPage(state: ViewState, delta: number): ViewState {
  if (!state.drill) return state;
  const offset = Math.max(0, state.drill.offset + delta * state.drill.limit);
  return { ...state, drill: { ...state.drill, offset } };
}

export function closeDrill(state: ViewState): ViewState {
  return { ...state, drill: null };
}

// ============================================================================
// URL (de)serialization
// ============================================================================

export function toQuery(state: ViewState): string {
  const params = new URLSearchParams();
  params.set("view", state.view);
  if (state.systems.length) params.set("systems", state.systems.join(","));
  params.set("metric", state.metric);
  params.set("ci", state.ci);
  if (state.drill) {
    params.set("drill_feature", state.drill.feature);
    params.set("drill_label", state.drill.label);
    params.set("drill_offset", String(state.drill.offset));
    params.set("drill_limit", String(state.drill.limit));
  }
  return params.toString();
}

export function fromQuery(query: string): ViewState {
  const params = new URLSearchParams(query);
  const systems = (params.get("systems") ?? "")
    .split(",")
    .filter((s) => s.length > 0);
  const view = params.get("view");
  const metric = params.get("metric") ?? INITIAL_STATE.metric;
  const ci = params.get("ci") as CiChoice | null;
  let drill: DrillTarget | null = null;
  const drillFeature = params.get("drill_feature");
  const drillLabel = params.get("drill_label");
  if (drillFeature !== null && drillLabel !== null) {
    drill = {
      feature: drillFeature,
      label: drillLabel,
      offset: Number(params.get("drill_offset") ?? 0),
      limit: Number(params.get("drill_limit") ?? 20),
    };
  }
  return {
    view:
      view === "single" || view === "compare" || view === "systems"
        ? view
        : systems.length > 1
          ? "compare"
          : systems.length === 1
            ? "single"
            : "systems",
    systems,
    metric: SUPPORTED_METRICS.includes(metric) ? metric : INITIAL_STATE.metric,
    ci: ci === "bootstrap" || ci === "ttest" || ci === "none" ? ci : INITIAL_STATE.ci,
    drill,
  };
}

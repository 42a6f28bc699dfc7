import { BASEMAPS, LAYER_KEYS, LINE_LAYERS, RANK_KEYS, SCENARIOS } from "./contract";
import type { Basemap, LayerKey, RankKey, Scenario } from "./contract";

/**
 * The whole UI is a pure function of this record plus the fetched layer
 * documents. Transitions below return fresh states and re-establish the
 * menu rules, so no event handler can leave the controls inconsistent.
 */
export interface UiState {
  readonly region: string;
  readonly scenario: Scenario;
  readonly visibleLayers: ReadonlySet<LayerKey>;
  readonly topN: number;
  readonly orderBy: RankKey;
  readonly basemap: Basemap;
  readonly selectedFeature: string | null;
}

export function initialState(region: string): UiState {
  return {
    region,
    scenario: "baseline",
    visibleLayers: new Set<LayerKey>(["zones"]),
    topN: 20,
    orderBy: "slc",
    basemap: "grey",
    selectedFeature: null,
  };
}

export function hasLineLayer(layers: ReadonlySet<LayerKey>): boolean {
  for (const layer of layers) {
    if (LINE_LAYERS.has(layer)) return true;
  }
  return false;
}

/** Ranking only exists for lines, and only once a change scenario is on. */
export function orderBySelectorVisible(s: UiState): boolean {
  return hasLineLayer(s.visibleLayers) && s.scenario !== "baseline";
}

/** The top-n slider needs lines on screen, any scenario. */
export function topNSliderVisible(s: UiState): boolean {
  return hasLineLayer(s.visibleLayers);
}

// A hidden selector pins the ordering back to its default, so returning to
// the baseline silently forgets e.g. order_by=health_value.
function normalize(s: UiState): UiState {
  if (!orderBySelectorVisible(s) && s.orderBy !== "slc") {
    return { ...s, orderBy: "slc" };
  }
  return s;
}

export function setRegion(s: UiState, region: string): UiState {
  if (region === s.region) return s;
  return normalize({ ...s, region, selectedFeature: null });
}

export function setScenario(s: UiState, scenario: Scenario): UiState {
  return normalize({ ...s, scenario });
}

export function toggleLayer(s: UiState, layer: LayerKey): UiState {
  const layers = new Set(s.visibleLayers);
  if (layers.has(layer)) {
    layers.delete(layer);
  } else {
    layers.add(layer);
  }
  return normalize({ ...s, visibleLayers: layers });
}

export function setTopN(s: UiState, topN: number): UiState {
  if (!Number.isFinite(topN)) return s;
  return { ...s, topN: Math.max(1, Math.round(topN)) };
}

export function setOrderBy(s: UiState, orderBy: RankKey): UiState {
  if (!orderBySelectorVisible(s)) return s;
  return { ...s, orderBy };
}

export function setBasemap(s: UiState, basemap: Basemap): UiState {
  return { ...s, basemap };
}

export function selectFeature(s: UiState, id: string | null): UiState {
  return { ...s, selectedFeature: id };
}

/**
 * Everything that must hold after every transition, as a list of violation
 * messages. Exercised by the event-sequence property test; empty means ok.
 */
export function invariantViolations(s: UiState): string[] {
  const out: string[] = [];
  if (!SCENARIOS.includes(s.scenario)) out.push(`bad scenario ${s.scenario}`);
  if (!Number.isInteger(s.topN) || s.topN < 1) out.push(`bad top_n ${s.topN}`);
  if (!RANK_KEYS.includes(s.orderBy)) out.push(`bad order_by ${s.orderBy}`);
  if (!BASEMAPS.includes(s.basemap)) out.push(`bad basemap ${s.basemap}`);
  for (const layer of s.visibleLayers) {
    if (!LAYER_KEYS.includes(layer)) out.push(`bad layer ${layer}`);
  }
  if (!orderBySelectorVisible(s) && s.orderBy !== "slc") {
    out.push("order_by differs from slc while its selector is hidden");
  }
  return out;
}

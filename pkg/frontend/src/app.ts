import { api } from "./api";
import type { ApiClient, LayerQuery } from "./api";
import { basemapConfig, renderBasemap } from "./basemap";
import {
  BASEMAPS,
  LAYER_KEYS,
  LAYER_LABEL,
  LINE_LAYERS,
  RANK_KEYS,
  RANK_LABEL,
  SCENARIO_LABEL,
  VOLUME_PROP,
} from "./contract";
import type {
  Feature,
  FeatureCollection,
  LayerKey,
  RegionInfo,
  RegionStats,
  Scenario,
} from "./contract";
import { LayerFetcher } from "./fetcher";
import { fmtVolume } from "./format";
import { fitProjection } from "./geometry";
import type { Projection } from "./geometry";
import { legendBreaks, renderLegend } from "./legend";
import { featurePopup, renderPopup } from "./popup";
import { featureId, presentFeatureIds, renderMap } from "./render_map";
import {
  initialState,
  orderBySelectorVisible,
  selectFeature,
  setBasemap,
  setOrderBy,
  setRegion,
  setScenario,
  setTopN,
  toggleLayer,
  topNSliderVisible,
} from "./state";
import type { UiState } from "./state";
import {
  areasColumns,
  csvHref,
  linesColumns,
  renderModelOutput,
  renderTable,
  toCsv,
} from "./tabs";
import type { TableHandle } from "./tabs";

const TABS = ["map", "lines", "areas", "model", "manual"] as const;
type Tab = (typeof TABS)[number];

const TEMPLATE = `
<header class="topbar">
  <h1>cycleplan</h1>
  <nav class="tabs" id="tab-nav">
    <button data-tab="map" class="active">Map</button>
    <button data-tab="lines">Lines</button>
    <button data-tab="areas">Areas</button>
    <button data-tab="model">Model output</button>
    <button data-tab="manual">Manual</button>
  </nav>
</header>
<div class="error-banner" id="error-banner" role="alert" hidden>
  <span id="error-text"></span>
  <button id="error-dismiss" type="button">Dismiss</button>
</div>
<main class="layout">
  <aside class="controls">
    <label>Region
      <select id="region-select"></select>
    </label>
    <label>Scenario
      <select id="scenario-select"></select>
    </label>
    <fieldset id="layer-toggles">
      <legend>Layers</legend>
    </fieldset>
    <label id="top-n-control">Top flows
      <input id="top-n" type="range" min="1" max="200" step="1" />
      <span id="top-n-value"></span>
    </label>
    <label id="order-by-control">Order by
      <select id="order-by"></select>
    </label>
    <label>Basemap
      <select id="basemap-select"></select>
    </label>
  </aside>
  <section class="panels">
    <div class="panel" data-panel="map">
      <svg id="map" xmlns="http://www.w3.org/2000/svg"></svg>
      <div id="legend" class="legend" hidden></div>
      <div id="popup" class="popup" hidden></div>
    </div>
    <div class="panel" data-panel="lines" hidden>
      <button id="lines-csv" type="button">Download CSV</button>
      <div id="lines-table"></div>
    </div>
    <div class="panel" data-panel="areas" hidden>
      <button id="areas-csv" type="button">Download CSV</button>
      <div id="areas-table"></div>
    </div>
    <div class="panel" data-panel="model" hidden>
      <div id="model-output"></div>
    </div>
    <div class="panel" data-panel="manual" hidden>
      <h2>Manual</h2>
      <p>The map shows where cycling could grow. Pick a scenario to recolour
      zones and desire lines by their modelled cycling level; the baseline
      shows observed commuting. Desire lines, fast routes and quiet routes
      obey the top-flows slider, and under a change scenario they can be
      reordered by cyclists, health value or CO2 saved.</p>
      <p>Click any zone, line, route or network segment for its numbers. The
      Lines and Areas tabs show the raw served values behind the map and
      offer CSV downloads; Model output shows the fitted uptake model and
      the distance distribution of cycling under each scenario.</p>
    </div>
  </section>
</main>
`;

export interface AppHandle {
  state(): UiState;
  whenIdle(): Promise<void>;
}

export async function mountApp(root: HTMLElement, client: ApiClient = api): Promise<AppHandle> {
  root.innerHTML = TEMPLATE;
  const el = <T extends HTMLElement>(id: string): T => {
    const found = root.querySelector<T>(`#${id}`);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  };
  const regionSelect = el<HTMLSelectElement>("region-select");
  const scenarioSelect = el<HTMLSelectElement>("scenario-select");
  const layerToggles = el<HTMLFieldSetElement>("layer-toggles");
  const topNControl = el<HTMLElement>("top-n-control");
  const topNInput = el<HTMLInputElement>("top-n");
  const topNValue = el<HTMLElement>("top-n-value");
  const orderByControl = el<HTMLElement>("order-by-control");
  const orderBySelect = el<HTMLSelectElement>("order-by");
  const basemapSelect = el<HTMLSelectElement>("basemap-select");
  const banner = el<HTMLElement>("error-banner");
  const bannerText = el<HTMLElement>("error-text");
  const svgMaybe = root.querySelector<SVGSVGElement>("#map");
  if (!svgMaybe) throw new Error("missing element #map");
  const svg: SVGSVGElement = svgMaybe;
  const legendEl = el<HTMLElement>("legend");
  const popupEl = el<HTMLElement>("popup");
  const linesTableEl = el<HTMLElement>("lines-table");
  const areasTableEl = el<HTMLElement>("areas-table");
  const modelEl = el<HTMLElement>("model-output");

  const regions = await client.regions();
  if (regions.length === 0) throw new Error("service reports no regions");
  const regionById = new Map<string, RegionInfo>(regions.map((r) => [r.region_id, r]));
  const first = regions[0] as RegionInfo;

  let state = initialState(first.region_id);
  let proj: Projection = fitProjection(first.bbox);
  let stats: RegionStats | null = null;
  const docs = new Map<LayerKey, FeatureCollection>();
  const bmConfig = basemapConfig();
  const linesSort: TableHandle = { sortKey: null, sortDir: "desc" };
  const areasSort: TableHandle = { sortKey: null, sortDir: "desc" };

  // whenIdle resolves once every fetch issued so far has settled, which is
  // what tests and chained interactions wait on
  const inflight = new Set<Promise<unknown>>();
  function track(p: Promise<unknown>): void {
    inflight.add(p);
    void p.catch(() => undefined).finally(() => inflight.delete(p));
  }
  async function whenIdle(): Promise<void> {
    while (inflight.size > 0) {
      await Promise.allSettled([...inflight]);
    }
  }

  function currentRegion(): RegionInfo {
    return regionById.get(state.region) ?? first;
  }

  function showError(message: string): void {
    bannerText.textContent = message;
    banner.hidden = false;
  }

  const fetcher = new LayerFetcher(
    (layer, q) => client.layer(state.region, layer, q),
    ({ layer, doc }) => {
      docs.set(layer, doc);
      banner.hidden = true;
      rerender();
    },
    (layer, err) => {
      // the previous document stays in place, the user just hears about it
      showError(`${LAYER_LABEL[layer]}: ${err.message}`);
    },
  );

  function layerQuery(layer: LayerKey): LayerQuery {
    if (LINE_LAYERS.has(layer)) {
      return { scenario: state.scenario, n: state.topN, orderBy: state.orderBy };
    }
    return { scenario: state.scenario };
  }

  function refetch(layers: Iterable<LayerKey>): void {
    for (const layer of layers) {
      if (!state.visibleLayers.has(layer)) continue;
      track(fetcher.request(layer, layerQuery(layer)));
    }
  }

  function visibleLineLayers(): LayerKey[] {
    return [...state.visibleLayers].filter((l) => LINE_LAYERS.has(l));
  }

  function onSelect(id: string, _layer: LayerKey, _feature: Feature, evt: MouseEvent): void {
    state = selectFeature(state, id);
    popupEl.style.left = `${evt.clientX + 8}px`;
    popupEl.style.top = `${evt.clientY + 8}px`;
    rerender();
  }

  function syncControls(): void {
    scenarioSelect.value = state.scenario;
    orderByControl.hidden = !orderBySelectorVisible(state);
    orderBySelect.value = state.orderBy;
    topNControl.hidden = !topNSliderVisible(state);
    topNInput.value = String(state.topN);
    topNValue.textContent = String(state.topN);
    basemapSelect.value = state.basemap;
    for (const box of layerToggles.querySelectorAll<HTMLInputElement>("input[type=checkbox]")) {
      box.checked = state.visibleLayers.has(box.value as LayerKey);
    }
  }

  function legendSource(): { values: number[]; title: string } | null {
    const prop = VOLUME_PROP[state.scenario];
    const pick = (layer: LayerKey) => {
      const doc = docs.get(layer);
      if (!doc || !state.visibleLayers.has(layer)) return null;
      const values = doc.features
        .map((f) => f.properties[prop])
        .filter((v): v is number => typeof v === "number");
      return values.length > 0 ? values : null;
    };
    for (const layer of ["zones", "straight_lines", "fast_routes", "quiet_routes", "network"] as LayerKey[]) {
      const values = pick(layer);
      if (values) {
        return {
          values,
          title: `${SCENARIO_LABEL[state.scenario]} cyclists (${LAYER_LABEL[layer]})`,
        };
      }
    }
    return null;
  }

  function syncPopup(): void {
    if (state.selectedFeature === null) {
      popupEl.hidden = true;
      return;
    }
    const present = presentFeatureIds(docs, state.visibleLayers, state.topN);
    if (!present.has(state.selectedFeature)) {
      state = selectFeature(state, null);
      popupEl.hidden = true;
      return;
    }
    // refresh the feature from the latest documents so a scenario switch
    // shows the new values for the same selection
    for (const [layer, doc] of docs) {
      if (!state.visibleLayers.has(layer)) continue;
      for (const f of doc.features) {
        if (featureId(layer, f) === state.selectedFeature) {
          renderPopup(popupEl, featurePopup(layer, f, state.scenario));
          return;
        }
      }
    }
  }

  function renderTabs(): void {
    const linesDoc = docs.get("straight_lines");
    renderTable(
      linesTableEl,
      linesDoc ? linesDoc.features : [],
      linesColumns(state.scenario),
      linesSort,
      (key) => {
        if (linesSort.sortKey === key) {
          linesSort.sortDir = linesSort.sortDir === "desc" ? "asc" : "desc";
        } else {
          linesSort.sortKey = key;
          linesSort.sortDir = "desc";
        }
        renderTabs();
      },
    );
    const zonesDoc = docs.get("zones");
    renderTable(
      areasTableEl,
      zonesDoc ? zonesDoc.features : [],
      areasColumns(state.scenario),
      areasSort,
      (key) => {
        if (areasSort.sortKey === key) {
          areasSort.sortDir = areasSort.sortDir === "desc" ? "asc" : "desc";
        } else {
          areasSort.sortKey = key;
          areasSort.sortDir = "desc";
        }
        renderTabs();
      },
    );
    if (stats) renderModelOutput(modelEl, stats);
  }

  function rerender(): void {
    renderMap(svg, docs, state.scenario, { proj, state, onSelect });
    svg.insertBefore(
      renderBasemap(state.basemap, bmConfig, currentRegion().bbox, proj),
      svg.firstChild,
    );
    const source = legendSource();
    if (source) {
      renderLegend(legendEl, source.title, legendBreaks(source.values), fmtVolume);
    } else {
      legendEl.hidden = true;
    }
    syncPopup();
    syncControls();
    renderTabs();
  }

  function rebuildScenarioOptions(): void {
    scenarioSelect.textContent = "";
    for (const scenario of currentRegion().scenarios) {
      const opt = document.createElement("option");
      opt.value = scenario;
      opt.textContent = SCENARIO_LABEL[scenario];
      scenarioSelect.appendChild(opt);
    }
  }

  // static option lists
  for (const r of regions) {
    const opt = document.createElement("option");
    opt.value = r.region_id;
    opt.textContent = r.region_id;
    regionSelect.appendChild(opt);
  }
  for (const layer of LAYER_KEYS) {
    const label = document.createElement("label");
    label.className = "layer-toggle";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = layer;
    box.addEventListener("change", () => {
      const turningOn = !state.visibleLayers.has(layer);
      state = toggleLayer(state, layer);
      if (turningOn) {
        refetch([layer]);
      } else {
        fetcher.drop(layer);
        docs.delete(layer);
      }
      rerender();
    });
    label.appendChild(box);
    label.appendChild(document.createTextNode(` ${LAYER_LABEL[layer]}`));
    layerToggles.appendChild(label);
  }
  for (const key of RANK_KEYS) {
    const opt = document.createElement("option");
    opt.value = key;
    opt.textContent = RANK_LABEL[key];
    orderBySelect.appendChild(opt);
  }
  for (const basemap of BASEMAPS) {
    const opt = document.createElement("option");
    opt.value = basemap;
    opt.textContent = basemap.replace(/_/g, " ");
    basemapSelect.appendChild(opt);
  }
  rebuildScenarioOptions();

  regionSelect.addEventListener("change", () => {
    state = setRegion(state, regionSelect.value);
    if (!currentRegion().scenarios.includes(state.scenario)) {
      state = setScenario(state, "baseline");
    }
    proj = fitProjection(currentRegion().bbox);
    docs.clear();
    stats = null;
    rebuildScenarioOptions();
    refetch(state.visibleLayers);
    track(
      client.stats(state.region).then(
        (s) => {
          stats = s;
          renderTabs();
        },
        (err: unknown) => showError(`stats: ${err instanceof Error ? err.message : String(err)}`),
      ),
    );
    rerender();
  });

  scenarioSelect.addEventListener("change", () => {
    state = setScenario(state, scenarioSelect.value as Scenario);
    syncControls();
    refetch(state.visibleLayers);
  });

  topNInput.addEventListener("input", () => {
    state = setTopN(state, Number(topNInput.value));
    syncControls();
    refetch(visibleLineLayers());
    rerender();
  });

  orderBySelect.addEventListener("change", () => {
    state = setOrderBy(state, orderBySelect.value as (typeof RANK_KEYS)[number]);
    refetch(visibleLineLayers());
  });

  basemapSelect.addEventListener("change", () => {
    state = setBasemap(state, basemapSelect.value as (typeof BASEMAPS)[number]);
    rerender();
  });

  el<HTMLButtonElement>("error-dismiss").addEventListener("click", () => {
    banner.hidden = true;
  });

  el<HTMLButtonElement>("lines-csv").addEventListener("click", () => {
    const doc = docs.get("straight_lines");
    if (!doc) return;
    triggerDownload(`${state.region}_lines.csv`, toCsv(doc.features, linesColumns(state.scenario)));
  });
  el<HTMLButtonElement>("areas-csv").addEventListener("click", () => {
    const doc = docs.get("zones");
    if (!doc) return;
    triggerDownload(`${state.region}_areas.csv`, toCsv(doc.features, areasColumns(state.scenario)));
  });

  const nav = el<HTMLElement>("tab-nav");
  nav.addEventListener("click", (evt) => {
    const target = evt.target as HTMLElement;
    const tab = target.dataset["tab"] as Tab | undefined;
    if (!tab) return;
    for (const button of nav.querySelectorAll("button")) {
      button.classList.toggle("active", button === target);
    }
    for (const panel of root.querySelectorAll<HTMLElement>(".panel")) {
      panel.hidden = panel.dataset["panel"] !== tab;
    }
    // data tabs can be opened without the matching map layer; fetch what
    // they mirror if nothing is cached yet
    if (tab === "lines" && !docs.has("straight_lines")) {
      track(
        fetcher.request("straight_lines", {
          scenario: state.scenario,
          n: state.topN,
          orderBy: state.orderBy,
        }),
      );
    }
    if (tab === "areas" && !docs.has("zones")) {
      track(fetcher.request("zones", { scenario: state.scenario }));
    }
    if (tab === "model" && stats === null) {
      track(
        client.stats(state.region).then(
          (s) => {
            stats = s;
            renderTabs();
          },
          (err: unknown) =>
            showError(`stats: ${err instanceof Error ? err.message : String(err)}`),
        ),
      );
    }
  });

  syncControls();
  refetch(state.visibleLayers);
  track(
    client.stats(state.region).then(
      (s) => {
        stats = s;
        renderTabs();
      },
      (err: unknown) => showError(`stats: ${err instanceof Error ? err.message : String(err)}`),
    ),
  );
  rerender();

  return {
    state: () => state,
    whenIdle,
  };
}

function triggerDownload(filename: string, csv: string): void {
  const a = document.createElement("a");
  a.href = csvHref(csv);
  a.download = filename;
  document.body.appendChild(a);
  a.click();
  a.remove();
}

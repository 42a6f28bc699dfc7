import { VOLUME_PROP } from "./contract";
import type { Feature, FeatureCollection, LayerKey, Scenario } from "./contract";
import { lineStringPath, polygonPath } from "./geometry";
import type { LonLat, Projection } from "./geometry";
import type { UiState } from "./state";

const SVG_NS = "http://www.w3.org/2000/svg";

export const MIN_LINE_WIDTH_PX = 1;
export const MAX_LINE_WIDTH_PX = 12;

/**
 * Stroke width for a flow value: proportional to the value, with the layer
 * maximum pinned to MAX_LINE_WIDTH_PX and a 1px floor so zero-flow lines
 * stay visible and clickable.
 */
export function lineWidth(value: number, maxValue: number): number {
  if (!(maxValue > 0) || !(value > 0)) return MIN_LINE_WIDTH_PX;
  return Math.max(MIN_LINE_WIDTH_PX, (value / maxValue) * MAX_LINE_WIDTH_PX);
}

/** Light-to-dark blue ramp over t in [0, 1]. */
export function colorRamp(t: number): string {
  const u = Math.max(0, Math.min(1, t));
  const stops: [number, number, number][] = [
    [237, 248, 177],
    [127, 205, 187],
    [44, 127, 184],
  ];
  const pos = u * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const frac = pos - i;
  const a = stops[i] as [number, number, number];
  const b = stops[i + 1] as [number, number, number];
  const mix = a.map((c, k) => Math.round(c + ((b[k] as number) - c) * frac));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

const LINE_COLOR: Partial<Record<LayerKey, string>> = {
  straight_lines: "#c2331f",
  fast_routes: "#1d5fa8",
  quiet_routes: "#2a7a2a",
  network: "#6a3d9a",
};

function numProp(f: Feature, name: string): number | null {
  const v = f.properties[name];
  return typeof v === "number" ? v : null;
}

/**
 * Stable identity for a feature across refetches, used to keep a selection
 * alive over scenario changes. Zones have ids; pair layers use the OD key;
 * network segments, which carry nothing but volumes, fall back to their
 * endpoint coordinates.
 */
export function featureId(layer: LayerKey, f: Feature): string {
  if (layer === "zones" || layer === "centroids") {
    return `zone:${String(f.properties["id"] ?? "")}`;
  }
  if (layer === "network") {
    const coords = f.geometry.coordinates as LonLat[];
    const first = coords[0] ?? [0, 0];
    const last = coords[coords.length - 1] ?? [0, 0];
    return `network:${first[0]},${first[1]}:${last[0]},${last[1]}`;
  }
  return `${layer}:${String(f.properties["origin"] ?? "")}->${String(f.properties["dest"] ?? "")}`;
}

export type SelectHandler = (id: string, layer: LayerKey, feature: Feature, evt: MouseEvent) => void;

interface LayerCtx {
  proj: Projection;
  state: UiState;
  onSelect: SelectHandler;
}

function group(layer: LayerKey): SVGGElement {
  const g = document.createElementNS(SVG_NS, "g");
  g.dataset.layer = layer;
  return g;
}

function attachSelect(
  el: SVGElement,
  layer: LayerKey,
  f: Feature,
  ctx: LayerCtx,
): void {
  const id = featureId(layer, f);
  el.dataset.id = id;
  if (ctx.state.selectedFeature === id) el.classList.add("selected");
  el.addEventListener("click", (evt) => ctx.onSelect(id, layer, f, evt as MouseEvent));
}

export function renderZones(doc: FeatureCollection, scenario: Scenario, ctx: LayerCtx): SVGGElement {
  const g = group("zones");
  const prop = VOLUME_PROP[scenario];
  const max = Math.max(0, ...doc.features.map((f) => numProp(f, prop) ?? 0));
  for (const f of doc.features) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", polygonPath(f.geometry, ctx.proj));
    const value = numProp(f, prop) ?? 0;
    path.setAttribute("fill", colorRamp(max > 0 ? value / max : 0));
    path.setAttribute("fill-opacity", "0.55");
    path.setAttribute("stroke", "#555");
    path.setAttribute("stroke-width", "0.8");
    path.classList.add("zone");
    attachSelect(path, "zones", f, ctx);
    g.appendChild(path);
  }
  return g;
}

/**
 * Line layers (desire lines, fast and quiet routes). Draws exactly
 * min(top_n, features) lines; the server is asked for top_n features, so
 * the slice only matters when a cached document is larger than the slider.
 */
export function renderLines(
  layer: LayerKey,
  doc: FeatureCollection,
  scenario: Scenario,
  ctx: LayerCtx,
): SVGGElement {
  const g = group(layer);
  const prop = VOLUME_PROP[scenario];
  const shown = doc.features.slice(0, ctx.state.topN);
  const max = Math.max(0, ...shown.map((f) => numProp(f, prop) ?? 0));
  for (const f of shown) {
    if (f.geometry.type !== "LineString") continue;
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", lineStringPath(f.geometry.coordinates as LonLat[], ctx.proj));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", LINE_COLOR[layer] ?? "#c2331f");
    path.setAttribute("stroke-width", String(lineWidth(numProp(f, prop) ?? 0, max)));
    path.setAttribute("stroke-linecap", "round");
    path.setAttribute("stroke-opacity", "0.8");
    attachSelect(path, layer, f, ctx);
    g.appendChild(path);
  }
  return g;
}

export function renderNetwork(doc: FeatureCollection, scenario: Scenario, ctx: LayerCtx): SVGGElement {
  const g = group("network");
  const prop = VOLUME_PROP[scenario];
  const max = Math.max(0, ...doc.features.map((f) => numProp(f, prop) ?? 0));
  for (const f of doc.features) {
    const path = document.createElementNS(SVG_NS, "path");
    path.setAttribute("d", lineStringPath(f.geometry.coordinates as LonLat[], ctx.proj));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", LINE_COLOR.network ?? "#6a3d9a");
    path.setAttribute("stroke-width", String(lineWidth(numProp(f, prop) ?? 0, max)));
    path.setAttribute("stroke-opacity", "0.9");
    attachSelect(path, "network", f, ctx);
    g.appendChild(path);
  }
  return g;
}

export function renderCentroids(doc: FeatureCollection, ctx: LayerCtx): SVGGElement {
  const g = group("centroids");
  for (const f of doc.features) {
    const [lon, lat] = f.geometry.coordinates as LonLat;
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(ctx.proj.x(lon)));
    circle.setAttribute("cy", String(ctx.proj.y(lat)));
    circle.setAttribute("r", "4");
    circle.setAttribute("fill", "#333");
    attachSelect(circle, "centroids", f, ctx);
    g.appendChild(circle);
  }
  return g;
}

// Paint order: polygons under lines under points.
const RENDER_ORDER: LayerKey[] = [
  "zones",
  "network",
  "quiet_routes",
  "fast_routes",
  "straight_lines",
  "centroids",
];

export function renderMap(
  svg: SVGSVGElement,
  docs: ReadonlyMap<LayerKey, FeatureCollection>,
  scenario: Scenario,
  ctx: LayerCtx,
): void {
  svg.setAttribute("viewBox", `0 0 ${ctx.proj.width} ${ctx.proj.height}`);
  svg.textContent = "";
  for (const layer of RENDER_ORDER) {
    if (!ctx.state.visibleLayers.has(layer)) continue;
    const doc = docs.get(layer);
    if (!doc) continue;
    let g: SVGGElement;
    if (layer === "zones") g = renderZones(doc, scenario, ctx);
    else if (layer === "network") g = renderNetwork(doc, scenario, ctx);
    else if (layer === "centroids") g = renderCentroids(doc, ctx);
    else g = renderLines(layer, doc, scenario, ctx);
    svg.appendChild(g);
  }
}

/** Ids of every feature currently drawable, for selection liveness checks. */
export function presentFeatureIds(
  docs: ReadonlyMap<LayerKey, FeatureCollection>,
  visible: ReadonlySet<LayerKey>,
  topN: number,
): Set<string> {
  const ids = new Set<string>();
  for (const [layer, doc] of docs) {
    if (!visible.has(layer)) continue;
    const features =
      layer === "straight_lines" || layer === "fast_routes" || layer === "quiet_routes"
        ? doc.features.slice(0, topN)
        : doc.features;
    for (const f of features) ids.add(featureId(layer, f));
  }
  return ids;
}

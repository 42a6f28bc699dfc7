import type {
  FeatureCollection,
  LayerKey,
  RankKey,
  RegionInfo,
  RegionStats,
  Scenario,
} from "./contract";

export interface LayerQuery {
  scenario: Scenario;
  n?: number;
  orderBy?: RankKey;
}

export function layerUrl(region: string, layer: LayerKey, q: LayerQuery): string {
  const params = new URLSearchParams({ layer, scenario: q.scenario });
  if (q.n !== undefined) params.set("n", String(q.n));
  // slc is the server default and the only key the baseline accepts, so it
  // is never sent explicitly
  if (q.orderBy !== undefined && q.orderBy !== "slc") {
    params.set("order_by", q.orderBy);
  }
  return `/regions/${encodeURIComponent(region)}/layer?${params.toString()}`;
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url, { headers: { accept: "application/json" } });
  if (!res.ok) {
    let detail = "";
    try {
      const body = (await res.json()) as { detail?: unknown };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // error bodies are not always json
    }
    throw new Error(detail || `HTTP ${res.status} for ${url}`);
  }
  return (await res.json()) as T;
}

export interface ApiClient {
  regions(): Promise<RegionInfo[]>;
  layer(region: string, layer: LayerKey, q: LayerQuery): Promise<FeatureCollection>;
  stats(region: string): Promise<RegionStats>;
}

export const api: ApiClient = {
  regions: () => getJson<RegionInfo[]>("/regions"),
  layer: (region, layer, q) => getJson<FeatureCollection>(layerUrl(region, layer, q)),
  stats: (region) => getJson<RegionStats>(`/regions/${encodeURIComponent(region)}/stats`),
};

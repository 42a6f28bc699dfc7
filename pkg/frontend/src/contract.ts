// Names shared with the layer service. Everything here is wire contract:
// the server serialises these exact strings and the UI must not invent or
// rename any of them.

export const SCENARIOS = [
  "baseline",
  "govtarget",
  "genderequal",
  "godutch",
  "ebikes",
] as const;
export type Scenario = (typeof SCENARIOS)[number];
export type ChangeScenario = Exclude<Scenario, "baseline">;

export const SCENARIO_LABEL: Record<Scenario, string> = {
  baseline: "Baseline",
  govtarget: "Government Target",
  genderequal: "Gender Equality",
  godutch: "Go Dutch",
  ebikes: "E-bikes",
};

export const LAYER_KEYS = [
  "zones",
  "straight_lines",
  "fast_routes",
  "quiet_routes",
  "network",
  "centroids",
] as const;
export type LayerKey = (typeof LAYER_KEYS)[number];

export const LAYER_LABEL: Record<LayerKey, string> = {
  zones: "Zones",
  straight_lines: "Desire lines",
  fast_routes: "Fast routes",
  quiet_routes: "Quiet routes",
  network: "Route network",
  centroids: "Centroids",
};

// The three layers the top-n / order-by controls apply to.
export const LINE_LAYERS: ReadonlySet<LayerKey> = new Set([
  "straight_lines",
  "fast_routes",
  "quiet_routes",
]);

export const RANK_KEYS = ["slc", "health_value", "co2_saved"] as const;
export type RankKey = (typeof RANK_KEYS)[number];

export const RANK_LABEL: Record<RankKey, string> = {
  slc: "Cyclists",
  health_value: "Health value",
  co2_saved: "CO2 saved",
};

export const BASEMAPS = [
  "grey",
  "cycle_infrastructure",
  "deprivation",
  "satellite",
] as const;
export type Basemap = (typeof BASEMAPS)[number];

// Per-scenario volume property on every layer that carries volumes.
export const VOLUME_PROP: Record<Scenario, string> = {
  baseline: "baseline",
  govtarget: "govtarget_slc",
  genderequal: "genderequal_slc",
  godutch: "dutch_slc",
  ebikes: "ebike_slc",
};

// Impact properties are stem + metric; the stems differ from the scenario
// query values for two scenarios, a served-name quirk the UI must follow.
export const IMPACT_STEM: Record<ChangeScenario, string> = {
  govtarget: "govtarget",
  genderequal: "genderequal",
  godutch: "dutch",
  ebikes: "ebike",
};

export type ImpactMetric = "health_value" | "co2_saved" | "net_deaths";

export function impactProp(scenario: ChangeScenario, metric: ImpactMetric): string {
  return `${IMPACT_STEM[scenario]}_${metric}`;
}

export type PropValue = number | string | boolean | null;

export interface Feature {
  type: "Feature";
  geometry: {
    type: "Point" | "LineString" | "Polygon" | "MultiPolygon";
    coordinates: unknown;
  };
  properties: Record<string, PropValue>;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: Feature[];
}

export interface RegionInfo {
  region_id: string;
  bbox: [number, number, number, number];
  scenarios: Scenario[];
  gender_available: boolean;
}

export interface RegionStats {
  region_id: string;
  bbox: [number, number, number, number];
  scenarios: Scenario[];
  gender_available: boolean;
  coefficients: Record<string, number>;
  counts: Record<string, number>;
  totals: {
    commuters: number;
    observed_cycle: number;
    scenarios: Record<string, Record<string, number>>;
  };
  distance_distribution: {
    band_edges_km: number[];
    rows: {
      scenario: Scenario;
      d_min_km: number;
      d_max_km: number;
      trips_all: number;
      slc: number;
      share: number;
    }[];
  };
  circuity: Record<string, number>;
  network: {
    atomic_segments: number;
    merged_segments: number;
    weighted_length_totals: Record<string, number>;
  };
  fit: Record<string, unknown>;
  routing_errors: unknown[];
}

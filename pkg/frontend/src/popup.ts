import { impactProp, SCENARIO_LABEL, VOLUME_PROP } from "./contract";
import type { Feature, LayerKey, Scenario } from "./contract";
import {
  fmtCount,
  fmtKg,
  fmtKm,
  fmtKm2,
  fmtMoney,
  fmtPct,
  fmtRatio,
  fmtVolume,
  orNa,
} from "./format";

export interface PopupRow {
  label: string;
  value: string;
}

export interface PopupContent {
  title: string;
  rows: PopupRow[];
}

function p(f: Feature, name: string): unknown {
  return f.properties[name];
}

/**
 * Popup body for a clicked feature. Values are formatted served properties,
 * nothing is computed here; anything the layer does not carry (an errored
 * line's route distances, say) renders as "n/a" rather than breaking.
 */
export function featurePopup(layer: LayerKey, f: Feature, scenario: Scenario): PopupContent {
  const volumeProp = VOLUME_PROP[scenario];
  const scenarioName = SCENARIO_LABEL[scenario];

  if (layer === "zones" || layer === "centroids") {
    const name = p(f, "name");
    const id = String(p(f, "id") ?? "");
    return {
      title: typeof name === "string" && name ? `${name} (${id})` : `Zone ${id}`,
      rows: [
        { label: "Area", value: orNa(p(f, "area_km2"), fmtKm2) },
        { label: "Commuters", value: orNa(p(f, "all"), fmtCount) },
        { label: `${scenarioName} cyclists`, value: orNa(p(f, volumeProp), fmtVolume) },
        { label: "Within-zone commuters", value: orNa(p(f, "intrazonal_all"), fmtCount) },
        {
          label: `Within-zone ${scenarioName} cyclists`,
          value: orNa(p(f, `intrazonal_${volumeProp}`), fmtVolume),
        },
      ],
    };
  }

  if (layer === "fast_routes" || layer === "quiet_routes") {
    const kind = layer === "fast_routes" ? "Fast" : "Quiet";
    return {
      title: `${kind} route ${String(p(f, "origin"))} to ${String(p(f, "dest"))}`,
      rows: [
        { label: "Distance", value: orNa(p(f, "distance_km"), fmtKm) },
        { label: "Circuity", value: orNa(p(f, "circuity"), fmtRatio) },
        { label: "Hilliness", value: orNa(p(f, "gradient_pct"), fmtPct) },
        { label: `${scenarioName} cyclists`, value: orNa(p(f, volumeProp), fmtVolume) },
      ],
    };
  }

  if (layer === "network") {
    // a segment's properties are exactly the per-scenario volumes
    const rows: PopupRow[] = [];
    for (const [s, prop] of Object.entries(VOLUME_PROP) as [Scenario, string][]) {
      if (p(f, prop) !== undefined) {
        rows.push({ label: `${SCENARIO_LABEL[s]} cyclists`, value: orNa(p(f, prop), fmtVolume) });
      }
    }
    return { title: "Route network segment", rows };
  }

  const rows: PopupRow[] = [
    { label: "Commuters", value: orNa(p(f, "all"), fmtCount) },
    { label: "Cycle", value: orNa(p(f, "cycle"), fmtCount) },
    { label: "Walk", value: orNa(p(f, "walk"), fmtCount) },
    { label: "Car", value: orNa(p(f, "car"), fmtCount) },
    { label: "Other", value: orNa(p(f, "other"), fmtCount) },
    { label: `${scenarioName} cyclists`, value: orNa(p(f, volumeProp), fmtVolume) },
    { label: "Fast route", value: orNa(p(f, "fast_km"), fmtKm) },
    { label: "Quiet route", value: orNa(p(f, "quiet_km"), fmtKm) },
    { label: "Circuity (fast)", value: orNa(p(f, "circuity_fast"), fmtRatio) },
    { label: "Circuity (quiet)", value: orNa(p(f, "circuity_quiet"), fmtRatio) },
    { label: "Hilliness", value: orNa(p(f, "gradient_pct"), fmtPct) },
  ];
  if (scenario !== "baseline") {
    rows.push(
      {
        label: "Health value",
        value: orNa(p(f, impactProp(scenario, "health_value")), fmtMoney),
      },
      { label: "CO2 saved", value: orNa(p(f, impactProp(scenario, "co2_saved")), fmtKg) },
    );
  }
  const err = p(f, "routing_error");
  if (typeof err === "string" && err) {
    rows.push({ label: "Routing failed", value: err });
  }
  return {
    title: `${String(p(f, "origin"))} to ${String(p(f, "dest"))}`,
    rows,
  };
}

export function renderPopup(el: HTMLElement, content: PopupContent): void {
  el.textContent = "";
  const title = document.createElement("div");
  title.className = "popup-title";
  title.textContent = content.title;
  el.appendChild(title);
  const table = document.createElement("table");
  for (const row of content.rows) {
    const tr = document.createElement("tr");
    const th = document.createElement("th");
    th.textContent = row.label;
    const td = document.createElement("td");
    td.textContent = row.value;
    // labels never carry data; every served value on screen is a value cell
    td.dataset.val = "";
    tr.appendChild(th);
    tr.appendChild(td);
    table.appendChild(tr);
  }
  el.appendChild(table);
  el.hidden = false;
}

import { describe, expect, it } from "vitest";

import type { Feature } from "../src/contract";
import {
  areasColumns,
  csvHref,
  linesColumns,
  renderModelOutput,
  renderTable,
  sortFeatures,
  toCsv,
} from "../src/tabs";
import { makeRegion } from "./fixtures";

function lineFeature(origin: string, dest: string, extra: Feature["properties"]): Feature {
  return {
    type: "Feature",
    geometry: { type: "LineString", coordinates: [] },
    properties: { origin, dest, ...extra },
  };
}

describe("columns", () => {
  it("line tables carry the scenario's served property names", () => {
    const cols = linesColumns("godutch").map((c) => c.key);
    expect(cols).toContain("dutch_slc");
    expect(cols).toContain("dutch_health_value");
    expect(cols).toContain("dutch_co2_saved");
  });

  it("baseline tables have no impact columns", () => {
    const cols = linesColumns("baseline").map((c) => c.key);
    expect(cols).toContain("baseline");
    expect(cols.every((k) => !k.endsWith("health_value"))).toBe(true);
  });

  it("area tables include the within-zone volume", () => {
    const cols = areasColumns("ebikes").map((c) => c.key);
    expect(cols).toContain("ebike_slc");
    expect(cols).toContain("intrazonal_ebike_slc");
  });
});

describe("sortFeatures", () => {
  const features = [
    lineFeature("b", "c", { dutch_health_value: 9 }),
    lineFeature("a", "b", { dutch_health_value: 9 }),
    lineFeature("c", "d", { dutch_health_value: null }),
    lineFeature("a", "a", { dutch_health_value: 120 }),
  ];

  it("matches the server ranking: value desc, missing last, od tie-break", () => {
    // independent expectation, written out by hand from the ranking rules
    const expected = ["a->a", "a->b", "b->c", "c->d"];
    const got = sortFeatures(features, "dutch_health_value", "desc").map(
      (f) => `${String(f.properties["origin"])}->${String(f.properties["dest"])}`,
    );
    expect(got).toEqual(expected);
  });

  it("ascending still parks missing values at the end", () => {
    const got = sortFeatures(features, "dutch_health_value", "asc").map(
      (f) => `${String(f.properties["origin"])}->${String(f.properties["dest"])}`,
    );
    expect(got).toEqual(["a->b", "b->c", "a->a", "c->d"]);
  });

  it("reproduces the served order of a ranked fetch", () => {
    // the fixture stub ranks with the same documented rules the server
    // uses; client-side sorting of the unranked document must agree
    const region = makeRegion();
    const unranked = region.straight_lines.features;
    const clientSorted = sortFeatures(unranked, "dutch_health_value", "desc");
    const byHealth = [...unranked].sort((a, b) => {
      const va = a.properties["dutch_health_value"];
      const vb = b.properties["dutch_health_value"];
      const ma = typeof va !== "number";
      const mb = typeof vb !== "number";
      if (ma !== mb) return ma ? 1 : -1;
      if (!ma && !mb && va !== vb) return (vb as number) - (va as number);
      return 0;
    });
    expect(clientSorted.map((f) => f.properties["origin"])).toEqual(
      byHealth.map((f) => f.properties["origin"]),
    );
  });
});

describe("renderTable", () => {
  it("renders one row per feature with raw cell values", () => {
    const el = document.createElement("div");
    const features = [
      lineFeature("a", "b", { all: 210, cycle: 20, dutch_slc: 150.75 }),
      lineFeature("b", "c", { all: 200, cycle: 19, dutch_slc: 140.75 }),
    ];
    renderTable(
      el,
      features,
      [
        { key: "origin", label: "origin" },
        { key: "all", label: "all" },
        { key: "dutch_slc", label: "dutch_slc" },
      ],
      { sortKey: null, sortDir: "desc" },
      () => undefined,
    );
    const rows = el.querySelectorAll("tbody tr");
    expect(rows).toHaveLength(2);
    expect(rows[0]?.textContent).toBe("a210150.75");
  });

  it("missing cells read n/a", () => {
    const el = document.createElement("div");
    renderTable(
      el,
      [lineFeature("a", "b", { fast_km: null })],
      [{ key: "fast_km", label: "fast_km" }],
      { sortKey: null, sortDir: "desc" },
      () => undefined,
    );
    expect(el.querySelector("tbody td")?.textContent).toBe("n/a");
  });

  it("clicking a header reports the sort key", () => {
    const el = document.createElement("div");
    let sorted: string | null = null;
    renderTable(
      el,
      [],
      [{ key: "all", label: "all" }],
      { sortKey: null, sortDir: "desc" },
      (key) => {
        sorted = key;
      },
    );
    el.querySelector("thead th")?.dispatchEvent(new MouseEvent("click"));
    expect(sorted).toBe("all");
  });
});

describe("csv export", () => {
  it("quotes commas and doubles quotes", () => {
    const features = [
      lineFeature("a", "b", { name: 'Ward "North", Riverside', all: 12 }),
    ];
    const csv = toCsv(features, [
      { key: "name", label: "name" },
      { key: "all", label: "all" },
    ]);
    expect(csv).toBe('name,all\n"Ward ""North"", Riverside",12\n');
  });

  it("leaves missing values empty", () => {
    const csv = toCsv([lineFeature("a", "b", { fast_km: null })], [
      { key: "fast_km", label: "fast_km" },
    ]);
    expect(csv).toBe("fast_km\n\n");
  });

  it("encodes the file as a data url", () => {
    expect(csvHref("a,b\n1,2\n")).toBe("data:text/csv;charset=utf-8,a%2Cb%0A1%2C2%0A");
  });
});

describe("model output tab", () => {
  it("lists every fitted coefficient raw, straight from the stats", () => {
    const region = makeRegion();
    const el = document.createElement("div");
    renderModelOutput(el, region.stats);
    const cells = [...el.querySelectorAll("table")].flatMap((t) => [
      ...t.querySelectorAll("td[data-val]"),
    ]);
    const texts = cells.map((c) => c.textContent);
    expect(texts).toContain(String(region.stats.coefficients["alpha"]));
    expect(texts).toContain(String(region.stats.coefficients["gamma_sqrtdh"]));
    const coefficientRows = el.querySelectorAll("table")[0]?.querySelectorAll("tr");
    expect(coefficientRows).toHaveLength(7);
  });

  it("draws one bar per distance band and scenario", () => {
    const region = makeRegion();
    const el = document.createElement("div");
    renderModelOutput(el, region.stats);
    const bars = el.querySelectorAll("svg rect");
    expect(bars).toHaveLength(region.stats.distance_distribution.rows.length);
  });
});

import { describe, expect, it } from "vitest";

import { BASEMAPS, LAYER_KEYS, RANK_KEYS, SCENARIOS } from "../src/contract";
import {
  initialState,
  invariantViolations,
  orderBySelectorVisible,
  selectFeature,
  setBasemap,
  setOrderBy,
  setScenario,
  setTopN,
  toggleLayer,
  topNSliderVisible,
} from "../src/state";
import type { UiState } from "../src/state";

describe("menu visibility rules", () => {
  it("starts at the baseline with both line controls hidden", () => {
    const s = initialState("r");
    expect(s.scenario).toBe("baseline");
    expect(orderBySelectorVisible(s)).toBe(false);
    expect(topNSliderVisible(s)).toBe(false);
  });

  it("shows the slider but not the ordering for lines at baseline", () => {
    const s = toggleLayer(initialState("r"), "straight_lines");
    expect(topNSliderVisible(s)).toBe(true);
    expect(orderBySelectorVisible(s)).toBe(false);
  });

  it("shows the ordering once lines meet a change scenario", () => {
    let s = toggleLayer(initialState("r"), "straight_lines");
    s = setScenario(s, "godutch");
    expect(orderBySelectorVisible(s)).toBe(true);
  });

  it("keeps the ordering hidden for change scenarios without lines", () => {
    const s = setScenario(initialState("r"), "godutch");
    expect(orderBySelectorVisible(s)).toBe(false);
  });

  it("any of the three line layers is enough", () => {
    for (const layer of ["straight_lines", "fast_routes", "quiet_routes"] as const) {
      const s = setScenario(toggleLayer(initialState("r"), layer), "ebikes");
      expect(orderBySelectorVisible(s)).toBe(true);
    }
  });
});

describe("order_by reset", () => {
  it("returning to the baseline hides the selector and forgets the choice", () => {
    let s = toggleLayer(initialState("r"), "straight_lines");
    s = setScenario(s, "godutch");
    s = setOrderBy(s, "health_value");
    expect(s.orderBy).toBe("health_value");
    s = setScenario(s, "baseline");
    expect(orderBySelectorVisible(s)).toBe(false);
    expect(s.orderBy).toBe("slc");
  });

  it("hiding the last line layer forgets the choice too", () => {
    let s = toggleLayer(initialState("r"), "fast_routes");
    s = setScenario(s, "govtarget");
    s = setOrderBy(s, "co2_saved");
    s = toggleLayer(s, "fast_routes");
    expect(s.orderBy).toBe("slc");
  });

  it("ignores attempts to set the ordering while its selector is hidden", () => {
    const s = setOrderBy(initialState("r"), "health_value");
    expect(s.orderBy).toBe("slc");
  });
});

describe("top_n", () => {
  it("clamps to at least one and rounds to an integer", () => {
    const s = initialState("r");
    expect(setTopN(s, 0).topN).toBe(1);
    expect(setTopN(s, -4).topN).toBe(1);
    expect(setTopN(s, 5.7).topN).toBe(6);
    expect(setTopN(s, Number.NaN).topN).toBe(s.topN);
  });
});

describe("event sequence property", () => {
  // small deterministic generator; no dependency needed for this
  function lcg(seed: number): () => number {
    let x = seed >>> 0;
    return () => {
      x = (Math.imul(x, 1664525) + 1013904223) >>> 0;
      return x / 2 ** 32;
    };
  }

  function pick<T>(rnd: () => number, xs: readonly T[]): T {
    return xs[Math.floor(rnd() * xs.length)] as T;
  }

  it("every reachable state satisfies the invariants", () => {
    const rnd = lcg(20260819);
    for (let run = 0; run < 300; run += 1) {
      let s: UiState = initialState("r");
      for (let step = 0; step < 40; step += 1) {
        const kind = Math.floor(rnd() * 6);
        if (kind === 0) s = setScenario(s, pick(rnd, SCENARIOS));
        else if (kind === 1) s = toggleLayer(s, pick(rnd, LAYER_KEYS));
        else if (kind === 2) s = setTopN(s, rnd() * 60 - 5);
        else if (kind === 3) s = setOrderBy(s, pick(rnd, RANK_KEYS));
        else if (kind === 4) s = setBasemap(s, pick(rnd, BASEMAPS));
        else s = selectFeature(s, rnd() < 0.5 ? null : "zone:a");
        const violations = invariantViolations(s);
        expect(violations).toEqual([]);
      }
    }
  });
});

import { colorRamp } from "./render_map";

/**
 * Legend break values, picked as nearest-rank quantiles of the data. Order
 * statistics are actual members of the data set, so every number printed in
 * the legend is a value the server sent, not an interpolation.
 */
export function legendBreaks(values: number[], quantiles = [0, 0.25, 0.5, 0.75, 1]): number[] {
  const xs = values.filter((v) => Number.isFinite(v)).sort((a, b) => a - b);
  if (xs.length === 0) return [];
  const picks = quantiles.map((q) => {
    const rank = Math.min(xs.length - 1, Math.max(0, Math.ceil(q * xs.length) - 1));
    return xs[rank] as number;
  });
  return [...new Set(picks)];
}

export function renderLegend(
  el: HTMLElement,
  title: string,
  breaks: number[],
  fmt: (v: number) => string,
): void {
  el.textContent = "";
  if (breaks.length === 0) {
    el.hidden = true;
    return;
  }
  el.hidden = false;
  const heading = document.createElement("div");
  heading.className = "legend-title";
  heading.textContent = title;
  el.appendChild(heading);
  const max = breaks[breaks.length - 1] as number;
  for (const value of breaks) {
    const row = document.createElement("div");
    row.className = "legend-row";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.background = colorRamp(max > 0 ? value / max : 0);
    const label = document.createElement("span");
    label.dataset.val = "";
    label.textContent = fmt(value);
    row.appendChild(swatch);
    row.appendChild(label);
    el.appendChild(row);
  }
}

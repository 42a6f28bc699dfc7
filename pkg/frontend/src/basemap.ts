import type { Basemap } from "./contract";
import type { Projection } from "./geometry";

/**
 * Tile URL templates per basemap, with {z}/{x}/{y} placeholders. These are
 * deployment configuration: a host page sets window.CYCLEPLAN_BASEMAPS
 * before the app loads, or everything except the plain grey background
 * stays empty and the selector is still functional but visually inert.
 */
export type BasemapConfig = Record<Basemap, string>;

const DEFAULTS: BasemapConfig = {
  grey: "",
  cycle_infrastructure: "",
  deprivation: "",
  satellite: "",
};

declare global {
  interface Window {
    CYCLEPLAN_BASEMAPS?: Partial<BasemapConfig>;
  }
}

export function basemapConfig(): BasemapConfig {
  return { ...DEFAULTS, ...(typeof window !== "undefined" ? window.CYCLEPLAN_BASEMAPS : undefined) };
}

const SVG_NS = "http://www.w3.org/2000/svg";
const TILE_SIZE = 256;

function lonToTileX(lon: number, z: number): number {
  return ((lon + 180) / 360) * 2 ** z;
}

function latToTileY(lat: number, z: number): number {
  const rad = (lat * Math.PI) / 180;
  return ((1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2) * 2 ** z;
}

/**
 * Raster tiles covering the bbox at a zoom where one tile is roughly the
 * viewport, drawn as svg images under the vector layers. Slippy-map tiles
 * are Web Mercator while the vector projection is equirectangular; over a
 * region-sized bbox the mismatch is a few pixels, acceptable for backdrop
 * imagery.
 */
export function renderBasemap(
  basemap: Basemap,
  config: BasemapConfig,
  bbox: [number, number, number, number],
  proj: Projection,
): SVGGElement {
  const g = document.createElementNS(SVG_NS, "g");
  g.dataset.basemap = basemap;
  const template = config[basemap];
  if (!template) return g;

  const [minLon, minLat, maxLon, maxLat] = bbox;
  let z = 12;
  while (z > 1 && (lonToTileX(maxLon, z) - lonToTileX(minLon, z)) * TILE_SIZE > proj.width * 3) {
    z -= 1;
  }
  const x0 = Math.floor(lonToTileX(minLon, z));
  const x1 = Math.floor(lonToTileX(maxLon, z));
  const y0 = Math.floor(latToTileY(maxLat, z));
  const y1 = Math.floor(latToTileY(minLat, z));
  for (let x = x0; x <= x1; x += 1) {
    for (let y = y0; y <= y1; y += 1) {
      const tileMinLon = (x / 2 ** z) * 360 - 180;
      const tileMaxLon = ((x + 1) / 2 ** z) * 360 - 180;
      const n0 = Math.PI - (2 * Math.PI * y) / 2 ** z;
      const n1 = Math.PI - (2 * Math.PI * (y + 1)) / 2 ** z;
      const tileMaxLat = (180 / Math.PI) * Math.atan(Math.sinh(n0));
      const tileMinLat = (180 / Math.PI) * Math.atan(Math.sinh(n1));
      const img = document.createElementNS(SVG_NS, "image");
      const url = template
        .replace("{z}", String(z))
        .replace("{x}", String(x))
        .replace("{y}", String(y));
      img.setAttribute("href", url);
      img.setAttribute("x", String(proj.x(tileMinLon)));
      img.setAttribute("y", String(proj.y(tileMaxLat)));
      img.setAttribute("width", String(proj.x(tileMaxLon) - proj.x(tileMinLon)));
      img.setAttribute("height", String(proj.y(tileMinLat) - proj.y(tileMaxLat)));
      img.setAttribute("preserveAspectRatio", "none");
      g.appendChild(img);
    }
  }
  return g;
}

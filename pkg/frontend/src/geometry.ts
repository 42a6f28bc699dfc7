// Equirectangular projection fitted to a region bbox. Regions span a few
// tens of km, so flat-earth error is far below a pixel; longitudes shrink
// by cos(mid latitude) to keep kilometres square on screen.

export type LonLat = [number, number];

export interface Projection {
  width: number;
  height: number;
  x(lon: number): number;
  y(lat: number): number;
}

export function fitProjection(
  bbox: [number, number, number, number],
  maxWidth = 820,
  maxHeight = 560,
  pad = 24,
): Projection {
  const [minLon, minLat, maxLon, maxLat] = bbox;
  const kLat = Math.cos((((minLat + maxLat) / 2) * Math.PI) / 180);
  const spanX = Math.max((maxLon - minLon) * kLat, 1e-9);
  const spanY = Math.max(maxLat - minLat, 1e-9);
  const scale = Math.min((maxWidth - 2 * pad) / spanX, (maxHeight - 2 * pad) / spanY);
  return {
    width: spanX * scale + 2 * pad,
    height: spanY * scale + 2 * pad,
    x: (lon) => pad + (lon - minLon) * kLat * scale,
    // svg y points down
    y: (lat) => pad + (maxLat - lat) * scale,
  };
}

function fmt(n: number): string {
  return n.toFixed(1);
}

export function lineStringPath(coords: LonLat[], proj: Projection): string {
  const parts: string[] = [];
  coords.forEach(([lon, lat], i) => {
    parts.push(`${i === 0 ? "M" : "L"}${fmt(proj.x(lon))},${fmt(proj.y(lat))}`);
  });
  return parts.join(" ");
}

function ringPath(ring: LonLat[], proj: Projection): string {
  if (ring.length < 3) return "";
  return `${lineStringPath(ring, proj)} Z`;
}

/** Path for a Polygon or MultiPolygon geometry, holes included. */
export function polygonPath(
  geometry: { type: string; coordinates: unknown },
  proj: Projection,
): string {
  const parts: string[] = [];
  if (geometry.type === "Polygon") {
    for (const ring of geometry.coordinates as LonLat[][]) {
      parts.push(ringPath(ring, proj));
    }
  } else if (geometry.type === "MultiPolygon") {
    for (const poly of geometry.coordinates as LonLat[][][]) {
      for (const ring of poly) parts.push(ringPath(ring, proj));
    }
  }
  return parts.filter(Boolean).join(" ");
}

"""Route network aggregation: overlapping routes to summed segment volumes.

Routes are decomposed into atomic segments keyed by quantized endpoints;
volumes sum per segment occurrence. Aggregation is a pure hash-map
reduction, linear in total vertices, so its exactness relies on the router
emitting shared vertices for shared streets. Per-segment sums use math.fsum
over canonically collected contributions, which makes the output
independent of route input order down to the last bit.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core_data import Point, ValidationError, euclidean_km

# Quantization grid in degrees (~0.1 m): absorbs float noise in router
# output without merging distinct streets.
GRID_DEG = 1e-6

QPoint = tuple[int, int]
SegKey = tuple[QPoint, QPoint]


def quantize_point(pt: Point) -> QPoint:
    return (round(pt[0] / GRID_DEG), round(pt[1] / GRID_DEG))


def dequantize_point(q: QPoint) -> Point:
    return (q[0] * GRID_DEG, q[1] * GRID_DEG)


def segment_length_km(key: SegKey) -> float:
    return euclidean_km(dequantize_point(key[0]), dequantize_point(key[1]))


def atomize(coords: Sequence[Point]) -> list[SegKey]:
    """Split a polyline into canonical atomic segment keys.

    One key per consecutive vertex pair, endpoints quantized then ordered,
    so a line and its reverse atomize identically. Segments collapsing to a
    point on the grid are dropped.
    """
    if len(coords) < 2:
        raise ValidationError("polyline needs at least 2 points")
    keys: list[SegKey] = []
    prev = quantize_point(coords[0])
    for pt in coords[1:]:
        cur = quantize_point(pt)
        if cur != prev:
            keys.append((prev, cur) if prev <= cur else (cur, prev))
        prev = cur
    return keys


def _check_values(values: Mapping[str, float]) -> None:
    for name, value in values.items():
        if value < 0 or not math.isfinite(value):
            raise ValidationError(f"segment value {name}={value} must be non-negative")


@dataclass(frozen=True)
class AtomicSegment:
    """One quantized edge with summed per-scenario volumes."""

    a: QPoint
    b: QPoint
    values: Mapping[str, float]

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValidationError("atomic segment endpoints must differ")
        if self.a > self.b:
            raise ValidationError("atomic segment endpoints must be ordered")
        _check_values(self.values)

    @property
    def key(self) -> SegKey:
        return (self.a, self.b)

    @property
    def length_km(self) -> float:
        return segment_length_km(self.key)


@dataclass(frozen=True)
class NetworkSegment:
    """A run of contiguous atomic segments sharing one value map."""

    geometry: tuple[Point, ...]
    values: Mapping[str, float]

    def __post_init__(self) -> None:
        if len(self.geometry) < 2:
            raise ValidationError("network segment needs at least 2 points")
        _check_values(self.values)

    @property
    def length_km(self) -> float:
        return sum(
            euclidean_km(self.geometry[i], self.geometry[i + 1])
            for i in range(len(self.geometry) - 1)
        )


def overline(
    routes: Iterable[tuple[Sequence[Point], Mapping[str, float]]]
) -> list[AtomicSegment]:
    """Sum per-scenario volumes over every atomic segment occurrence.

    A route traversing an edge twice contributes twice; that keeps the
    value-times-length total identical on the route and segment sides.
    """
    contributions: dict[SegKey, dict[str, list[float]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for coords, values in routes:
        keys = atomize(coords)
        for key in keys:
            bucket = contributions[key]
            for name, value in values.items():
                bucket[name].append(value)
    out = []
    for key in sorted(contributions):
        summed = {
            name: math.fsum(vals) for name, vals in sorted(contributions[key].items())
        }
        out.append(AtomicSegment(a=key[0], b=key[1], values=summed))
    return out


def merge_contiguous(segments: Sequence[AtomicSegment]) -> list[NetworkSegment]:
    """Merge degree-2 chains of equal-value segments into polylines.

    A vertex interrupts a chain if it touches anything other than exactly
    two segments with identical value maps. Total length is conserved; a
    closed equal-value loop comes back as a ring whose first and last
    points coincide.
    """
    by_node: dict[QPoint, list[int]] = defaultdict(list)
    for idx, seg in enumerate(segments):
        by_node[seg.a].append(idx)
        by_node[seg.b].append(idx)

    def passable(node: QPoint) -> bool:
        incident = by_node[node]
        return (
            len(incident) == 2
            and segments[incident[0]].values == segments[incident[1]].values
        )

    visited = [False] * len(segments)
    out: list[NetworkSegment] = []
    for start in range(len(segments)):
        if visited[start]:
            continue
        visited[start] = True
        nodes: list[QPoint] = [segments[start].a, segments[start].b]

        def extend(end_index: int) -> None:
            while True:
                node = nodes[end_index]
                if not passable(node):
                    return
                candidates = [i for i in by_node[node] if not visited[i]]
                if not candidates:
                    return
                nxt = candidates[0]
                visited[nxt] = True
                seg = segments[nxt]
                other = seg.b if seg.a == node else seg.a
                if end_index == -1:
                    nodes.append(other)
                else:
                    nodes.insert(0, other)

        extend(-1)
        extend(0)
        out.append(
            NetworkSegment(
                geometry=tuple(dequantize_point(n) for n in nodes),
                values=dict(segments[start].values),
            )
        )
    return out


def weighted_length_totals(
    segments: Iterable[AtomicSegment | NetworkSegment],
) -> dict[str, float]:
    """Per-scenario sum of value times segment length (conservation check)."""
    terms: dict[str, list[float]] = defaultdict(list)
    for seg in segments:
        length = seg.length_km
        for name, value in seg.values.items():
            terms[name].append(value * length)
    return {name: math.fsum(vals) for name, vals in sorted(terms.items())}


def network_geojson(network: Sequence[NetworkSegment]) -> dict:
    """Render merged segments as a GeoJSON FeatureCollection.

    Value-map keys become feature properties verbatim.
    """
    features = []
    for seg in network:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[lon, lat] for lon, lat in seg.geometry],
                },
                "properties": dict(seg.values),
            }
        )
    return {"type": "FeatureCollection", "features": features}

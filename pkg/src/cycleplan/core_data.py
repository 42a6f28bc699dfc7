"""Domain model and ingestion for zones, OD tables and mortality data.

All ingestion is single pass and single threaded. The collections returned
here are treated as immutable by the rest of the package, so they can be
shared freely across threads once loaded.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, TextIO

EARTH_RADIUS_KM = 6371.0088

OD_HEADER = ("origin", "dest", "all", "cycle", "walk", "car", "other")
OD_GENDER_HEADER = OD_HEADER + ("male_all", "male_cycle", "female_all", "female_cycle")

DEFAULT_MAX_EUCLID_KM = 20.0
DEFAULT_MIN_COMMUTERS = 10


class ValidationError(ValueError):
    """Input data violated a documented invariant."""


Point = tuple[float, float]  # (lon, lat) in WGS84 degrees


def _check_lonlat(pt: Point) -> None:
    lon, lat = pt
    if not (-180.0 <= lon <= 180.0) or not (-90.0 <= lat <= 90.0):
        raise ValidationError(f"coordinate out of range: lon={lon}, lat={lat}")


def euclidean_km(a: Point, b: Point) -> float:
    """Great-circle distance between two lon/lat points, in km.

    Haversine form, which is symmetric and stable for nearby points.
    """
    _check_lonlat(a)
    _check_lonlat(b)
    lon1, lat1 = math.radians(a[0]), math.radians(a[1])
    lon2, lat2 = math.radians(b[0]), math.radians(b[1])
    sdlat = math.sin((lat2 - lat1) / 2.0)
    sdlon = math.sin((lon2 - lon1) / 2.0)
    h = sdlat * sdlat + math.cos(lat1) * math.cos(lat2) * sdlon * sdlon
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def _ring_area_km2(ring: Sequence[Sequence[float]]) -> float:
    # Spherical excess formula (Chamberlain & Duquette); sign dropped, so
    # holes must be subtracted by the caller.
    if len(ring) < 3:
        return 0.0
    total = 0.0
    for i in range(len(ring)):
        lon1, lat1 = ring[i][0], ring[i][1]
        lon2, lat2 = ring[(i + 1) % len(ring)][0], ring[(i + 1) % len(ring)][1]
        total += math.radians(lon2 - lon1) * (
            2.0 + math.sin(math.radians(lat1)) + math.sin(math.radians(lat2))
        )
    return abs(total) * EARTH_RADIUS_KM * EARTH_RADIUS_KM / 2.0


def polygon_area_km2(geometry: Mapping) -> float:
    """Area of a GeoJSON Polygon or MultiPolygon in km² (holes subtracted)."""
    gtype = geometry.get("type")
    if gtype == "Polygon":
        polys = [geometry["coordinates"]]
    elif gtype == "MultiPolygon":
        polys = geometry["coordinates"]
    else:
        raise ValidationError(f"unsupported geometry type: {gtype!r}")
    area = 0.0
    for rings in polys:
        if not rings:
            continue
        area += _ring_area_km2(rings[0])
        for hole in rings[1:]:
            area -= _ring_area_km2(hole)
    return area


def _geometry_bbox(geometry: Mapping) -> tuple[float, float, float, float]:
    lons: list[float] = []
    lats: list[float] = []

    def walk(coords) -> None:
        if coords and isinstance(coords[0], (int, float)):
            lons.append(coords[0])
            lats.append(coords[1])
        else:
            for c in coords:
                walk(c)

    walk(geometry["coordinates"])
    if not lons:
        raise ValidationError("geometry has no coordinates")
    return min(lons), min(lats), max(lons), max(lats)


@dataclass(frozen=True)
class Zone:
    """An administrative zone with its boundary and population-weighted centroid."""

    id: str
    name: str
    boundary: Mapping  # GeoJSON Polygon/MultiPolygon geometry
    centroid: Point
    area_km2: float

    def __post_init__(self) -> None:
        if self.area_km2 <= 0:
            raise ValidationError(f"zone {self.id}: area must be positive, got {self.area_km2}")
        _check_lonlat(self.centroid)
        minlon, minlat, maxlon, maxlat = _geometry_bbox(self.boundary)
        lon, lat = self.centroid
        if not (minlon <= lon <= maxlon and minlat <= lat <= maxlat):
            raise ValidationError(
                f"zone {self.id}: centroid {self.centroid} outside boundary bbox"
            )

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return _geometry_bbox(self.boundary)


@dataclass(frozen=True)
class ODPair:
    """Commuter counts between two zones, by main mode.

    `car` counts people who drive as their main mode; passengers are in
    `other`. Gender columns are all-or-nothing: either all four are present
    or none is.
    """

    origin: str
    dest: str
    all: int
    cycle: int
    walk: int
    car: int
    other: int
    male_all: Optional[int] = None
    male_cycle: Optional[int] = None
    female_all: Optional[int] = None
    female_cycle: Optional[int] = None

    def __post_init__(self) -> None:
        for field in ("all", "cycle", "walk", "car", "other"):
            if getattr(self, field) < 0:
                raise ValidationError(
                    f"OD {self.origin}->{self.dest}: negative {field} count"
                )
        if self.cycle + self.walk + self.car + self.other != self.all:
            raise ValidationError(
                f"OD {self.origin}->{self.dest}: mode counts "
                f"{self.cycle}+{self.walk}+{self.car}+{self.other} != all={self.all}"
            )
        gender = [self.male_all, self.male_cycle, self.female_all, self.female_cycle]
        present = [g is not None for g in gender]
        if any(present) and not all(present):
            raise ValidationError(
                f"OD {self.origin}->{self.dest}: partial gender split"
            )
        if all(present):
            if any(g < 0 for g in gender):  # type: ignore[operator]
                raise ValidationError(
                    f"OD {self.origin}->{self.dest}: negative gender count"
                )
            if self.male_all + self.female_all != self.all:  # type: ignore[operator]
                raise ValidationError(
                    f"OD {self.origin}->{self.dest}: male_all + female_all != all"
                )
            if self.male_cycle + self.female_cycle != self.cycle:  # type: ignore[operator]
                raise ValidationError(
                    f"OD {self.origin}->{self.dest}: male_cycle + female_cycle != cycle"
                )
            if self.male_cycle > self.male_all or self.female_cycle > self.female_all:  # type: ignore[operator]
                raise ValidationError(
                    f"OD {self.origin}->{self.dest}: gender cycle count exceeds total"
                )

    @property
    def has_gender(self) -> bool:
        return self.male_all is not None

    @property
    def intrazonal(self) -> bool:
        return self.origin == self.dest


@dataclass(frozen=True)
class DesireLine:
    """Straight line between the centroids of an interzonal OD pair."""

    od: ODPair
    geometry: tuple[Point, Point]
    euclid_km: float

    def __post_init__(self) -> None:
        if self.od.intrazonal:
            raise ValidationError(f"no desire line for intrazonal pair {self.od.origin}")
        expected = euclidean_km(self.geometry[0], self.geometry[1])
        if abs(self.euclid_km - expected) > 1e-9 * max(1.0, expected):
            raise ValidationError(
                f"desire line {self.od.origin}->{self.od.dest}: stored length "
                f"{self.euclid_km} != geometric length {expected}"
            )


def _parse_count(raw: str, column: str, line_no: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(
            f"line {line_no}: column {column!r} is not an integer: {raw!r}"
        ) from None
    if value < 0:
        raise ValidationError(f"line {line_no}: column {column!r} is negative: {value}")
    return value


def parse_od_table(stream: str | TextIO) -> list[ODPair]:
    """Parse a comma-separated OD table into validated ODPair records.

    The header must be exactly `origin,dest,all,cycle,walk,car,other`, with
    the four gender columns optionally appended. Row order is preserved.
    Errors carry 1-based line numbers (header is line 1).
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise ValidationError("empty OD table") from None
    if header not in (OD_HEADER, OD_GENDER_HEADER):
        raise ValidationError(
            f"unexpected OD header {','.join(header)!r}; "
            f"expected {','.join(OD_GENDER_HEADER)!r} (gender columns optional)"
        )
    pairs: list[ODPair] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank trailing line
        if len(row) != len(header):
            raise ValidationError(
                f"line {line_no}: expected {len(header)} fields, got {len(row)}"
            )
        origin, dest = row[0].strip(), row[1].strip()
        if not origin or not dest:
            raise ValidationError(f"line {line_no}: empty zone id")
        counts = [_parse_count(row[i], header[i], line_no) for i in range(2, len(header))]
        try:
            pairs.append(ODPair(origin, dest, *counts))
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from None
    return pairs


def serialize_od_table(pairs: Sequence[ODPair]) -> str:
    """Inverse of parse_od_table; round-trips bit-identically for valid tables."""
    has_gender = bool(pairs) and pairs[0].has_gender
    header = OD_GENDER_HEADER if has_gender else OD_HEADER
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for p in pairs:
        row = [p.origin, p.dest, p.all, p.cycle, p.walk, p.car, p.other]
        if has_gender:
            row += [p.male_all, p.male_cycle, p.female_all, p.female_cycle]
        writer.writerow(row)
    return out.getvalue()


def aggregate_bidirectional(pairs: Iterable[ODPair]) -> list[ODPair]:
    """Collapse directed pairs onto unordered {origin, dest} keys.

    Counts are summed; the surviving orientation puts the lexicographically
    smaller id first. Intrazonal pairs pass through (summed if duplicated).
    Output is sorted by (origin, dest), which makes the operation idempotent
    and independent of input order. Gender counts survive only if every
    contributing record carries them.
    """
    groups: dict[tuple[str, str], list[ODPair]] = {}
    for p in pairs:
        key = (p.origin, p.dest) if p.origin <= p.dest else (p.dest, p.origin)
        groups.setdefault(key, []).append(p)
    out: list[ODPair] = []
    for (a, b), members in sorted(groups.items()):
        gender = all(m.has_gender for m in members)
        out.append(
            ODPair(
                origin=a,
                dest=b,
                all=sum(m.all for m in members),
                cycle=sum(m.cycle for m in members),
                walk=sum(m.walk for m in members),
                car=sum(m.car for m in members),
                other=sum(m.other for m in members),
                male_all=sum(m.male_all for m in members) if gender else None,  # type: ignore[misc]
                male_cycle=sum(m.male_cycle for m in members) if gender else None,  # type: ignore[misc]
                female_all=sum(m.female_all for m in members) if gender else None,  # type: ignore[misc]
                female_cycle=sum(m.female_cycle for m in members) if gender else None,  # type: ignore[misc]
            )
        )
    return out


def build_desire_lines(
    pairs: Iterable[ODPair], centroids: Mapping[str, Point]
) -> list[DesireLine]:
    """Desire lines for the interzonal pairs; intrazonal pairs are skipped."""
    lines = []
    for p in pairs:
        if p.intrazonal:
            continue
        a, b = centroids[p.origin], centroids[p.dest]
        lines.append(DesireLine(od=p, geometry=(a, b), euclid_km=euclidean_km(a, b)))
    return lines


@dataclass(frozen=True)
class EligibilitySplit:
    """Partition of an OD set by the line-layer selection thresholds."""

    eligible: tuple[ODPair, ...]
    intrazonal: tuple[ODPair, ...]
    excluded_distance: tuple[ODPair, ...]
    excluded_commuters: tuple[ODPair, ...]

    @property
    def excluded(self) -> tuple[ODPair, ...]:
        return self.excluded_distance + self.excluded_commuters


def filter_eligible(
    pairs: Iterable[ODPair],
    centroids: Mapping[str, Point],
    max_euclid_km: float = DEFAULT_MAX_EUCLID_KM,
    min_commuters: int = DEFAULT_MIN_COMMUTERS,
) -> EligibilitySplit:
    """Apply the selection thresholds to interzonal pairs.

    Bounds are inclusive: a pair at exactly max_euclid_km or exactly
    min_commuters is kept. Intrazonal pairs are not filtered; they are
    routed to the area-statistics path. A pair failing both thresholds is
    counted against the distance threshold.
    """
    eligible: list[ODPair] = []
    intra: list[ODPair] = []
    far: list[ODPair] = []
    small: list[ODPair] = []
    for p in pairs:
        if p.intrazonal:
            intra.append(p)
            continue
        d = euclidean_km(centroids[p.origin], centroids[p.dest])
        if d > max_euclid_km:
            far.append(p)
        elif p.all < min_commuters:
            small.append(p)
        else:
            eligible.append(p)
    return EligibilitySplit(tuple(eligible), tuple(intra), tuple(far), tuple(small))


def intrazonal_nominal_distance(zone: Zone) -> float:
    """Nominal route distance for within-zone travel: the equal-area circle radius."""
    if zone.area_km2 <= 0:
        raise ValidationError(f"zone {zone.id}: non-positive area {zone.area_km2}")
    return math.sqrt(zone.area_km2 / math.pi)


def parse_zones(
    geojson_text: str, centroids_csv: Optional[str] = None
) -> list[Zone]:
    """Load zones from a GeoJSON FeatureCollection.

    Centroids come either from `centroid_lon`/`centroid_lat` feature
    properties or from a separate `id,lon,lat` CSV. Zone areas are computed
    from the boundary geometry.
    """
    doc = json.loads(geojson_text)
    if doc.get("type") != "FeatureCollection":
        raise ValidationError("zones file is not a GeoJSON FeatureCollection")
    csv_centroids: dict[str, Point] = {}
    if centroids_csv is not None:
        reader = csv.reader(io.StringIO(centroids_csv))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "lon", "lat"]:
            raise ValidationError("centroid CSV header must be exactly 'id,lon,lat'")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"centroid CSV line {line_no}: expected 3 fields")
            try:
                csv_centroids[row[0].strip()] = (float(row[1]), float(row[2]))
            except ValueError:
                raise ValidationError(
                    f"centroid CSV line {line_no}: non-numeric coordinate"
                ) from None
    zones: list[Zone] = []
    seen: set[str] = set()
    for feature in doc.get("features", []):
        props = feature.get("properties") or {}
        zid = props.get("id")
        if zid is None:
            raise ValidationError("zone feature missing 'id' property")
        zid = str(zid)
        if zid in seen:
            raise ValidationError(f"duplicate zone id {zid!r}")
        seen.add(zid)
        geometry = feature.get("geometry")
        if not geometry:
            raise ValidationError(f"zone {zid}: missing geometry")
        if zid in csv_centroids:
            centroid = csv_centroids[zid]
        elif "centroid_lon" in props and "centroid_lat" in props:
            centroid = (float(props["centroid_lon"]), float(props["centroid_lat"]))
        else:
            raise ValidationError(f"zone {zid}: no centroid provided")
        zones.append(
            Zone(
                id=zid,
                name=str(props.get("name", zid)),
                boundary=geometry,
                centroid=centroid,
                area_km2=polygon_area_km2(geometry),
            )
        )
    return zones


@dataclass(frozen=True)
class MortalityRow:
    area_id: str
    sex: str
    age_min: int
    age_max: int
    annual_rate: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.annual_rate <= 1.0):
            raise ValidationError(
                f"mortality rate out of [0,1] for {self.area_id}/{self.sex}: {self.annual_rate}"
            )
        if self.age_min > self.age_max:
            raise ValidationError(
                f"mortality band inverted for {self.area_id}/{self.sex}: "
                f"{self.age_min}-{self.age_max}"
            )


class MortalityTable:
    """Annual mortality rates by area, sex and age band."""

    def __init__(self, rows: Iterable[MortalityRow]):
        self.rows = tuple(rows)
        self._by_cell: dict[tuple[str, str, int, int], float] = {}
        by_group: dict[tuple[str, str], list[MortalityRow]] = {}
        for row in self.rows:
            key = (row.area_id, row.sex, row.age_min, row.age_max)
            if key in self._by_cell:
                raise ValidationError(f"duplicate mortality cell {key}")
            self._by_cell[key] = row.annual_rate
            by_group.setdefault((row.area_id, row.sex), []).append(row)
        for (area, sex), group in by_group.items():
            bands = sorted((r.age_min, r.age_max) for r in group)
            for (lo1, hi1), (lo2, _hi2) in zip(bands, bands[1:]):
                if lo2 <= hi1:
                    raise ValidationError(
                        f"overlapping mortality bands for {area}/{sex}: "
                        f"{lo1}-{hi1} and {lo2}-..."
                    )

    def rate(self, area_id: str, sex: str, age_min: int, age_max: int) -> float:
        key = (area_id, sex, age_min, age_max)
        try:
            return self._by_cell[key]
        except KeyError:
            raise ValidationError(
                f"no mortality rate for area={area_id!r} sex={sex!r} "
                f"band={age_min}-{age_max}"
            ) from None

    def __len__(self) -> int:
        return len(self.rows)


def parse_mortality_csv(text: str) -> MortalityTable:
    """Parse `area_id,sex,age_min,age_max,annual_rate` rows."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["area_id", "sex", "age_min", "age_max", "annual_rate"]
    if header is None or [h.strip() for h in header] != expected:
        raise ValidationError(f"mortality CSV header must be {','.join(expected)!r}")
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ValidationError(f"mortality CSV line {line_no}: expected 5 fields")
        try:
            rows.append(
                MortalityRow(
                    area_id=row[0].strip(),
                    sex=row[1].strip(),
                    age_min=int(row[2]),
                    age_max=int(row[3]),
                    annual_rate=float(row[4]),
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"mortality CSV line {line_no}: {exc}") from None
        except ValueError:
            raise ValidationError(
                f"mortality CSV line {line_no}: malformed numeric field"
            ) from None
    return MortalityTable(rows)

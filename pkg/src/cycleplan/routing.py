"""Fast and quiet route acquisition, plus route-level metrics.

Routes come from an external HTTP routing service or from a deterministic
offline stub. Both produce the same document shape (coordinates,
distance_m, optional elevations_m), so everything downstream is
backend-agnostic. Service responses are cached on disk, one file per
(origin, dest, profile), which makes pipeline builds reproducible and lets
test fixtures stand in for the network.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import httpx

from .core_data import Point, ValidationError, euclidean_km

PROFILES = ("fast", "quiet")

# Wire values for the service's plan parameter, by profile.
PROFILE_PLAN = {"fast": "fastest", "quiet": "quietest"}

# Routes more circuitous than this get flagged, never dropped.
CIRCUITY_BENCHMARK = 1.2

ENDPOINT_TOLERANCE_DEG = 1e-6


class RoutingError(RuntimeError):
    """Base class for route acquisition failures."""


class RetriableRoutingError(RoutingError):
    """Transient failure (network, 5xx); the request may be retried."""


class ThrottleError(RoutingError):
    """The service signalled quota exhaustion."""


class RouteParseError(RoutingError):
    """The response document does not describe a usable route."""


@dataclass(frozen=True)
class Route:
    """One routed path between two zone centroids."""

    origin: str
    dest: str
    profile: str
    coords: tuple[Point, ...]
    distance_km: float
    gradient_pct: float
    elevations_m: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.profile not in PROFILES:
            raise ValidationError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if len(self.coords) < 2:
            raise ValidationError("route needs at least 2 coordinates")
        if self.distance_km <= 0 or not math.isfinite(self.distance_km):
            raise ValidationError(f"route distance {self.distance_km} must be positive")
        if self.gradient_pct < 0 or not math.isfinite(self.gradient_pct):
            raise ValidationError(f"gradient {self.gradient_pct} must be non-negative")
        if self.elevations_m is not None and len(self.elevations_m) != len(self.coords):
            raise ValidationError("elevations must align with coordinates")


def polyline_length_km(coords: Sequence[Point]) -> float:
    return sum(euclidean_km(coords[i], coords[i + 1]) for i in range(len(coords) - 1))


def mean_gradient(
    coords: Sequence[Point], elevations_m: Sequence[float], distance_km: float
) -> float:
    """Mean gradient in percent: total absolute elevation change over distance.

    Up and down both count, so an out-and-back hill is as hilly as a steady
    climb of the same total rise.
    """
    if len(elevations_m) != len(coords):
        raise ValidationError(
            f"{len(elevations_m)} elevations for {len(coords)} coordinates"
        )
    if distance_km <= 0:
        raise ValidationError("distance must be positive")
    total_change = sum(
        abs(elevations_m[i + 1] - elevations_m[i]) for i in range(len(elevations_m) - 1)
    )
    return 100.0 * total_change / (distance_km * 1000.0)


def circuity(route_km: float, euclid_km: float) -> float:
    """Ratio of along-route to straight-line distance.

    The quotient goes through the decimal readings of both distances, so
    ratios exact in decimal (2.3 / 1.6 = 1.4375) come out exact instead
    of one ulp off; everything else stays within an ulp of plain division.
    """
    if euclid_km <= 0:
        raise ValidationError("euclidean distance must be positive")
    return float(Fraction(repr(route_km)) / Fraction(repr(euclid_km)))


def _canonical_endpoints(origin: Point, dest: Point) -> tuple[Point, Point, bool]:
    # Orient so the first endpoint carries the larger |lat|; ties fall back
    # to lexicographic order. Both call directions then share one geometry.
    if abs(origin[1]) > abs(dest[1]):
        return origin, dest, False
    if abs(dest[1]) > abs(origin[1]):
        return dest, origin, True
    if origin <= dest:
        return origin, dest, False
    return dest, origin, True


def _dedupe(coords: list[Point]) -> tuple[Point, ...]:
    out: list[Point] = [coords[0]]
    for pt in coords[1:]:
        if pt != out[-1]:
            out.append(pt)
    return tuple(out)


def _subdivide(coords: Sequence[Point], step_deg: float) -> list[Point]:
    # Insert vertices at absolute multiples of step_deg along each
    # axis-aligned leg so routes sharing a corridor share vertices.
    out: list[Point] = [coords[0]]
    for a, b in zip(coords, coords[1:]):
        axis = 0 if a[1] == b[1] else 1
        lo, hi = a[axis], b[axis]
        direction = 1.0 if hi >= lo else -1.0
        start = math.floor(min(lo, hi) / step_deg) + 1
        stop = math.ceil(max(lo, hi) / step_deg)
        ticks = [k * step_deg for k in range(start, stop)]
        if direction < 0:
            ticks.reverse()
        for t in ticks:
            pt = (t, a[1]) if axis == 0 else (a[0], t)
            out.append(pt)
        out.append(b)
    return out


def stub_route(
    origin_id: str,
    dest_id: str,
    origin: Point,
    dest: Point,
    profile: str,
    elevation_fn: Optional[Callable[[float, float], float]] = None,
    subdivide_deg: Optional[float] = None,
) -> Route:
    """Deterministic offline route between two centroids.

    The fast profile takes a two-leg axis-aligned path via (dest_lon,
    origin_lat) in a canonical orientation; the quiet profile takes a
    three-leg staircase through the midline. Construction guarantees
    quiet distance >= fast distance and exact symmetry under endpoint
    swap. Gradients are 0 unless an elevation function is supplied.
    """
    if profile not in PROFILES:
        raise ValidationError(f"profile must be one of {PROFILES}, got {profile!r}")
    if origin == dest:
        raise ValidationError(
            f"stub route needs distinct endpoints, got {origin} twice"
        )
    p, q, reversed_call = _canonical_endpoints(origin, dest)

    def shape(raw: list[Point]) -> tuple[Point, ...]:
        if subdivide_deg is not None:
            if subdivide_deg <= 0:
                raise ValidationError("subdivide_deg must be positive")
            raw = _subdivide(_dedupe(raw), subdivide_deg)
        pts = _dedupe(raw)
        return tuple(reversed(pts)) if reversed_call else pts

    fast_raw = [p, (q[0], p[1]), q]
    if profile == "fast":
        coords = shape(fast_raw)
        distance_km = polyline_length_km(coords)
    else:
        mid_lon = (p[0] + q[0]) / 2.0
        coords = shape([p, (mid_lon, p[1]), (mid_lon, q[1]), q])
        distance_km = polyline_length_km(coords)
        # The staircase is never geometrically shorter, but when it collapses
        # onto the fast path the summation can round one ulp below it; clamp
        # so quiet >= fast holds as stated, not just almost always.
        distance_km = max(distance_km, polyline_length_km(shape(fast_raw)))
    elevations: Optional[tuple[float, ...]] = None
    gradient = 0.0
    if elevation_fn is not None:
        elevations = tuple(elevation_fn(lon, lat) for lon, lat in coords)
        gradient = mean_gradient(coords, elevations, distance_km)
    return Route(
        origin=origin_id,
        dest=dest_id,
        profile=profile,
        coords=coords,
        distance_km=distance_km,
        gradient_pct=gradient,
        elevations_m=elevations,
    )


def _route_from_document(
    doc: dict, origin_id: str, dest_id: str, origin: Point, dest: Point, profile: str
) -> Route:
    """Validate a response document and build the Route it describes."""

    def fail(reason: str) -> RouteParseError:
        excerpt = json.dumps(doc)[:200]
        return RouteParseError(
            f"route {origin_id}->{dest_id} ({profile}): {reason}; payload: {excerpt}"
        )

    coords_raw = doc.get("coordinates")
    if not isinstance(coords_raw, list) or len(coords_raw) < 2:
        raise fail("missing or short coordinates")
    try:
        coords = tuple((float(lon), float(lat)) for lon, lat in coords_raw)
    except (TypeError, ValueError):
        raise fail("coordinates are not lon/lat pairs")
    distance_m = doc.get("distance_m")
    if not isinstance(distance_m, (int, float)) or distance_m <= 0:
        raise fail("missing or non-positive distance_m")
    elevations_raw = doc.get("elevations_m")
    elevations: Optional[tuple[float, ...]] = None
    if elevations_raw is not None:
        if not isinstance(elevations_raw, list) or len(elevations_raw) != len(coords):
            raise fail("elevations_m does not align with coordinates")
        elevations = tuple(float(e) for e in elevations_raw)
    for end, centroid, label in ((coords[0], origin, "first"), (coords[-1], dest, "last")):
        if (
            abs(end[0] - centroid[0]) > ENDPOINT_TOLERANCE_DEG
            or abs(end[1] - centroid[1]) > ENDPOINT_TOLERANCE_DEG
        ):
            raise fail(f"{label} coordinate {end} does not match centroid {centroid}")
    distance_km = distance_m / 1000.0
    euclid = euclidean_km(origin, dest)
    if distance_km < euclid - 1e-6:
        raise fail(f"distance {distance_km} km shorter than straight line {euclid} km")
    gradient = 0.0
    if elevations is not None:
        gradient = mean_gradient(coords, elevations, distance_km)
    return Route(
        origin=origin_id,
        dest=dest_id,
        profile=profile,
        coords=coords,
        distance_km=distance_km,
        gradient_pct=gradient,
        elevations_m=elevations,
    )


def route_document(route: Route) -> dict:
    """Serialize a Route back to the wire/cache document shape."""
    doc: dict = {
        "coordinates": [[lon, lat] for lon, lat in route.coords],
        "distance_m": route.distance_km * 1000.0,
    }
    if route.elevations_m is not None:
        doc["elevations_m"] = list(route.elevations_m)
    return doc


def cache_filename(origin_id: str, dest_id: str, profile: str) -> str:
    return f"{origin_id}_{dest_id}_{profile}"


class RoutingClient:
    """HTTP client for the routing service with disk cache and rate limit.

    Thread-safe: the rate limiter serializes request starts while allowing
    bounded parallel in-flight requests.
    """

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        cache_dir: Optional[str | Path] = None,
        max_retries: int = 2,
        min_interval_s: float = 0.0,
        timeout_s: float = 30.0,
        transport: Optional[httpx.BaseTransport] = None,
    ) -> None:
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.max_retries = max_retries
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last_request = 0.0
        params = {"key": api_key} if api_key else None
        self._http = httpx.Client(
            base_url=base_url, params=params, timeout=timeout_s, transport=transport
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "RoutingClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _throttle(self) -> None:
        if self.min_interval_s <= 0:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._last_request + self.min_interval_s - now
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def _cache_path(self, origin_id: str, dest_id: str, profile: str) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / cache_filename(origin_id, dest_id, profile)

    def _request(self, origin: Point, dest: Point, profile: str) -> dict:
        params = {
            "plan": PROFILE_PLAN[profile],
            "points": f"{origin[0]},{origin[1]}|{dest[0]},{dest[1]}",
        }
        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries + 1):
            self._throttle()
            try:
                response = self._http.get("/", params=params)
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(min(2.0**attempt * 0.1, 2.0))
                continue
            if response.status_code == 429:
                raise ThrottleError(
                    f"routing service rate limit hit for {params['points']}"
                )
            if response.status_code >= 500:
                last_error = RetriableRoutingError(
                    f"routing service returned {response.status_code}"
                )
                if attempt < self.max_retries:
                    time.sleep(min(2.0**attempt * 0.1, 2.0))
                continue
            if response.status_code != 200:
                raise RoutingError(
                    f"routing service returned {response.status_code}: "
                    f"{response.text[:200]}"
                )
            try:
                return response.json()
            except ValueError:
                raise RouteParseError(
                    f"routing response is not valid JSON: {response.text[:200]}"
                )
        raise RetriableRoutingError(f"routing request failed: {last_error}")

    def fetch_route(
        self, origin_id: str, dest_id: str, origin: Point, dest: Point, profile: str
    ) -> Route:
        """Fetch one route, reading and populating the disk cache."""
        if profile not in PROFILES:
            raise ValidationError(f"profile must be one of {PROFILES}, got {profile!r}")
        cache_path = self._cache_path(origin_id, dest_id, profile)
        if cache_path is not None and cache_path.exists():
            doc = json.loads(cache_path.read_text())
            return _route_from_document(doc, origin_id, dest_id, origin, dest, profile)
        doc = self._request(origin, dest, profile)
        route = _route_from_document(doc, origin_id, dest_id, origin, dest, profile)
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            tmp = cache_path.with_name(cache_path.name + ".tmp")
            tmp.write_text(json.dumps(doc, sort_keys=True))
            tmp.replace(cache_path)
        return route


def read_route_metrics(path: str | Path) -> tuple[float, float]:
    """Distance (km) and mean gradient (%) from a cached route document.

    Skips the centroid cross-checks, so it works without zone data; used
    when fitting straight from a route cache.
    """
    path = Path(path)
    doc = json.loads(path.read_text())
    coords_raw = doc.get("coordinates")
    if not isinstance(coords_raw, list) or len(coords_raw) < 2:
        raise RouteParseError(f"{path.name}: missing or short coordinates")
    distance_m = doc.get("distance_m")
    if not isinstance(distance_m, (int, float)) or distance_m <= 0:
        raise RouteParseError(f"{path.name}: missing or non-positive distance_m")
    distance_km = distance_m / 1000.0
    elevations = doc.get("elevations_m")
    gradient = 0.0
    if elevations is not None:
        coords = [(float(lon), float(lat)) for lon, lat in coords_raw]
        gradient = mean_gradient(coords, [float(e) for e in elevations], distance_km)
    return distance_km, gradient


def load_cached_route(
    cache_dir: str | Path,
    origin_id: str,
    dest_id: str,
    origin: Point,
    dest: Point,
    profile: str,
) -> Route:
    """Read one route straight from a cache/fixture directory."""
    path = Path(cache_dir) / cache_filename(origin_id, dest_id, profile)
    doc = json.loads(path.read_text())
    return _route_from_document(doc, origin_id, dest_id, origin, dest, profile)


RouteFetcher = Callable[[str, str, Point, Point, str], Route]


def route_many(
    pairs: Iterable[tuple[str, str, Point, Point]],
    fetch: RouteFetcher,
    parallelism: int = 4,
) -> tuple[list[Route], list[tuple[str, str, str, str]]]:
    """Route every pair under both profiles with bounded parallelism.

    Returns (routes, errors) where errors carry (origin, dest, profile,
    message). Every requested (pair, profile) lands in exactly one of the
    two lists, so nothing is silently dropped. Routes come back in a
    deterministic order regardless of completion order.
    """
    jobs = [
        (origin_id, dest_id, origin, dest, profile)
        for origin_id, dest_id, origin, dest in pairs
        for profile in PROFILES
    ]
    slots: list[Optional[Route | tuple[str, str, str, str]]] = [None] * len(jobs)

    def run(index: int) -> None:
        origin_id, dest_id, origin, dest, profile = jobs[index]
        try:
            slots[index] = fetch(origin_id, dest_id, origin, dest, profile)
        except Exception as exc:
            slots[index] = (origin_id, dest_id, profile, str(exc))

    if parallelism <= 1:
        for i in range(len(jobs)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            list(pool.map(run, range(len(jobs))))
    routes = [s for s in slots if isinstance(s, Route)]
    errors = [s for s in slots if isinstance(s, tuple)]
    return routes, errors

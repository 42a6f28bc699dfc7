"""Region build pipeline: inputs to an immutable on-disk bundle.

A bundle directory holds zones, desire lines, fast/quiet routes, the
aggregated route network and a diagnostics document, plus a manifest of
content hashes. Builds are deterministic: the same inputs and config
produce byte-identical artifacts (no timestamps anywhere). Failures abort
with the stage name attached and leave no partial output behind, since
everything is written to a temporary directory and swapped in at the end.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import shutil
from bisect import bisect_left
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .core_data import (
    DEFAULT_MAX_EUCLID_KM,
    DEFAULT_MIN_COMMUTERS,
    ODPair,
    Point,
    ValidationError,
    Zone,
    aggregate_bidirectional,
    euclidean_km,
    filter_eligible,
    intrazonal_nominal_distance,
    parse_mortality_csv,
    parse_od_table,
    parse_zones,
)
from .impacts import ImpactParams, ImpactResult, impact_for_od
from .mode_model import (
    ModelCoefficients,
    fit_logistic,
    observations_from_ods,
    predict_pcycle,
)
from .netagg import (
    atomize,
    merge_contiguous,
    network_geojson,
    overline,
    segment_length_km,
    weighted_length_totals,
)
from .routing import (
    CIRCUITY_BENCHMARK,
    Route,
    RouteFetcher,
    RoutingClient,
    cache_filename,
    circuity,
    read_route_metrics,
    route_document,
    route_many,
    stub_route,
)
from .scenarios import (
    SCENARIOS,
    ModeShift,
    ScenarioParams,
    ScenarioResult,
    apportion_mode_shift,
    scenario_genderequal,
    scenario_godutch,
    scenario_govtarget,
    scenario_ebikes,
)

# Wire names for per-scenario volume properties, shared by every layer.
SCENARIO_VALUE_NAMES = {
    "baseline": "baseline",
    "govtarget": "govtarget_slc",
    "genderequal": "genderequal_slc",
    "godutch": "dutch_slc",
    "ebikes": "ebike_slc",
}

RANK_KEYS = ("slc", "health_value", "co2_saved")

DEFAULT_BAND_EDGES_KM = (0.0, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 25.0, 30.0)

ARTIFACT_FILES = {
    "zones": "zones.geojson",
    "lines": "lines.geojson",
    "fast_routes": "fast_routes.geojson",
    "quiet_routes": "quiet_routes.geojson",
    "network": "network.geojson",
    "stats": "stats.json",
}

MANIFEST_FILE = "manifest.json"


class PipelineError(RuntimeError):
    """A build stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str) -> None:
        self.stage = stage
        super().__init__(f"stage {stage}: {message}")


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, str(exc)) from exc


def scenario_stem(scenario: str) -> str:
    """Property-name stem for impact fields (govtarget, dutch, ebike, ...)."""
    name = SCENARIO_VALUE_NAMES[scenario]
    return name[: -len("_slc")] if name.endswith("_slc") else name


def make_elevation_fn(spec: Optional[Mapping]) -> Optional[Callable[[float, float], float]]:
    """Synthetic terrain for the stub router: a smooth sinusoidal surface."""
    if spec is None:
        return None
    amplitude = float(spec["amplitude_m"])
    wavelength = float(spec["wavelength_deg"])
    if wavelength <= 0:
        raise ValidationError("elevation wavelength_deg must be positive")
    k = 2.0 * math.pi / wavelength

    def elevation(lon: float, lat: float) -> float:
        return amplitude * (math.sin(k * lon) + math.sin(k * lat))

    return elevation


@dataclass(frozen=True)
class RoutingConfig:
    backend: str = "stub"
    base_url: Optional[str] = None
    api_key: Optional[str] = None
    cache_dir: Optional[Path] = None
    min_interval_s: float = 0.0
    parallelism: int = 4
    subdivide_deg: Optional[float] = None
    elevation: Optional[Mapping] = None

    def __post_init__(self) -> None:
        if self.backend not in ("stub", "service"):
            raise ValidationError(f"routing backend must be stub or service, got {self.backend!r}")
        if self.backend == "service" and not self.base_url:
            raise ValidationError("service routing backend needs a base_url")


@dataclass(frozen=True)
class PipelineConfig:
    """Build configuration; paths are resolved against the config file."""

    region_id: str
    od_csv: Path
    zones_path: Path
    mortality_csv: Path
    age_profiles_csv: Path
    impact_params_path: Path
    out_dir: Path
    centroids_csv: Optional[Path] = None
    coefficients_path: Optional[Path] = None
    fit_model: bool = False
    scenario_params_path: Optional[Path] = None
    max_euclid_km: float = DEFAULT_MAX_EUCLID_KM
    min_commuters: int = DEFAULT_MIN_COMMUTERS
    band_edges_km: tuple[float, ...] = DEFAULT_BAND_EDGES_KM
    routing: RoutingConfig = field(default_factory=RoutingConfig)

    def __post_init__(self) -> None:
        if not self.region_id:
            raise ValidationError("region_id must be non-empty")
        if self.coefficients_path is None and not self.fit_model:
            raise ValidationError("either coefficients or fit_model is required")

    _KEYS = {
        "region_id", "od_csv", "zones", "centroids_csv", "mortality_csv",
        "age_profiles_csv", "impact_params", "coefficients", "fit_model",
        "scenario_params", "max_euclid_km", "min_commuters", "band_edges_km",
        "routing", "out_dir",
    }
    _ROUTING_KEYS = {
        "backend", "base_url", "api_key", "cache_dir", "min_interval_s",
        "parallelism", "subdivide_deg", "elevation",
    }

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        data = json.loads(path.read_text())
        unknown = set(data) - cls._KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        for key in ("region_id", "od_csv", "zones", "mortality_csv",
                    "age_profiles_csv", "impact_params", "out_dir"):
            if key not in data:
                raise ValidationError(f"config missing required key {key!r}")
        base = path.parent

        def resolve(key: str) -> Optional[Path]:
            value = data.get(key)
            return None if value is None else (base / str(value)).resolve()

        routing_raw = data.get("routing") or {}
        unknown = set(routing_raw) - cls._ROUTING_KEYS
        if unknown:
            raise ValidationError(f"unknown routing config keys: {sorted(unknown)}")
        cache_dir = routing_raw.get("cache_dir")
        routing = RoutingConfig(
            backend=routing_raw.get("backend", "stub"),
            base_url=routing_raw.get("base_url"),
            api_key=routing_raw.get("api_key"),
            cache_dir=(base / cache_dir).resolve() if cache_dir else None,
            min_interval_s=float(routing_raw.get("min_interval_s", 0.0)),
            parallelism=int(routing_raw.get("parallelism", 4)),
            subdivide_deg=(
                float(routing_raw["subdivide_deg"])
                if routing_raw.get("subdivide_deg") is not None
                else None
            ),
            elevation=routing_raw.get("elevation"),
        )
        return cls(
            region_id=str(data["region_id"]),
            od_csv=resolve("od_csv"),  # type: ignore[arg-type]
            zones_path=resolve("zones"),  # type: ignore[arg-type]
            centroids_csv=resolve("centroids_csv"),
            mortality_csv=resolve("mortality_csv"),  # type: ignore[arg-type]
            age_profiles_csv=resolve("age_profiles_csv"),  # type: ignore[arg-type]
            impact_params_path=resolve("impact_params"),  # type: ignore[arg-type]
            coefficients_path=resolve("coefficients"),
            fit_model=bool(data.get("fit_model", False)),
            scenario_params_path=resolve("scenario_params"),
            max_euclid_km=float(data.get("max_euclid_km", DEFAULT_MAX_EUCLID_KM)),
            min_commuters=int(data.get("min_commuters", DEFAULT_MIN_COMMUTERS)),
            band_edges_km=tuple(
                float(e) for e in data.get("band_edges_km", DEFAULT_BAND_EDGES_KM)
            ),
            routing=routing,
            out_dir=resolve("out_dir"),  # type: ignore[arg-type]
        )


@dataclass
class RegionBundle:
    """In-memory view of one built region."""

    region_id: str
    zones: dict
    lines: dict
    fast_routes: dict
    quiet_routes: dict
    network: dict
    stats: dict
    manifest: dict

    @classmethod
    def load(cls, bundle_dir: str | Path) -> "RegionBundle":
        bundle_dir = Path(bundle_dir)
        docs = {
            name: json.loads((bundle_dir / filename).read_text())
            for name, filename in ARTIFACT_FILES.items()
        }
        manifest = json.loads((bundle_dir / MANIFEST_FILE).read_text())
        return cls(region_id=manifest["region_id"], manifest=manifest, **docs)


def distance_distribution(
    records: Iterable[tuple[float, int, Mapping[str, float]]],
    scenarios: Sequence[str],
    band_edges_km: Sequence[float],
) -> list[dict]:
    """Bin OD trips by route distance; report count and cycling share per band.

    Each record is (d_km, all, slc-by-scenario). Bands are half-open
    (lo, hi]; trips beyond the last edge are counted in the last band so
    the bands always partition the input.
    """
    edges = [float(e) for e in band_edges_km]
    if len(edges) < 2:
        raise ValidationError("need at least 2 band edges")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError("band edges must be strictly ascending")
    if edges[0] != 0.0:
        raise ValidationError("band edges must start at 0")
    n_bands = len(edges) - 1
    counts = [0] * n_bands
    slc_sums = [{s: 0.0 for s in scenarios} for _ in range(n_bands)]
    for d_km, n_all, slc in records:
        if d_km <= 0:
            raise ValidationError(f"non-positive distance {d_km}")
        band = min(max(bisect_left(edges, d_km) - 1, 0), n_bands - 1)
        counts[band] += n_all
        for s in scenarios:
            slc_sums[band][s] += slc[s]
    rows = []
    for i in range(n_bands):
        for s in scenarios:
            share = slc_sums[i][s] / counts[i] if counts[i] > 0 else 0.0
            rows.append(
                {
                    "d_min_km": edges[i],
                    "d_max_km": edges[i + 1],
                    "scenario": s,
                    "trips_all": counts[i],
                    "slc": slc_sums[i][s],
                    "share": share,
                }
            )
    return rows


def rank_lines(features: Sequence[dict], scenario: str, key: str, n: int) -> list[dict]:
    """Top-n line features by a per-scenario metric, server-side.

    Descending by value; ties break on (origin, dest) so the selection is
    deterministic. Features missing the metric (for example lines whose
    routing failed) sort last.
    """
    if key not in RANK_KEYS:
        raise ValidationError(f"unknown ranking key {key!r}; expected one of {RANK_KEYS}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if scenario not in SCENARIO_VALUE_NAMES:
        raise ValidationError(f"unknown scenario {scenario!r}")
    if key == "slc":
        prop = SCENARIO_VALUE_NAMES[scenario]
    else:
        if scenario == "baseline":
            raise ValidationError(f"key {key!r} is undefined for the baseline")
        prop = f"{scenario_stem(scenario)}_{key}"

    def sort_key(feature: dict) -> tuple:
        props = feature.get("properties") or {}
        value = props.get(prop)
        missing = value is None
        return (
            missing,
            -(value if not missing else 0.0),
            str(props.get("origin", "")),
            str(props.get("dest", "")),
        )

    return sorted(features, key=sort_key)[:n]


@dataclass
class _LineRecord:
    od: ODPair
    fast: Route
    quiet: Route
    euclid_km: float
    slc: dict[str, float]
    shifts: dict[str, ModeShift]
    impacts: dict[str, ImpactResult] = field(default_factory=dict)


@dataclass
class _IntraRecord:
    od: ODPair
    d_km: float
    slc: dict[str, float]
    shifts: dict[str, ModeShift]
    impacts: dict[str, ImpactResult] = field(default_factory=dict)


def _compute_slc(
    od: ODPair,
    d_km: float,
    h_pct: float,
    coeffs: ModelCoefficients,
    params: ScenarioParams,
    with_gender: bool,
) -> dict[str, float]:
    p_base = predict_pcycle(coeffs, d_km, h_pct)
    slc = {
        "baseline": float(od.cycle),
        "govtarget": scenario_govtarget(od, p_base),
        "godutch": scenario_godutch(coeffs, params, d_km, h_pct, od),
        "ebikes": scenario_ebikes(coeffs, params, d_km, h_pct, od),
    }
    if with_gender:
        slc["genderequal"] = scenario_genderequal(od)
    return slc


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _sha256_file(path: Path) -> str:
    return _sha256_bytes(path.read_bytes())


def _dump_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _feature(geometry: dict, properties: dict) -> dict:
    return {"type": "Feature", "geometry": geometry, "properties": properties}


def _collection(features: list[dict]) -> dict:
    return {"type": "FeatureCollection", "features": features}


def build_region(config: PipelineConfig) -> RegionBundle:
    """Run the full pipeline and write the bundle under out_dir/region_id."""

    # ingest: zones, OD table, bidirectional aggregation, eligibility split
    with _stage("ingest"):
        centroids_text = (
            config.centroids_csv.read_text() if config.centroids_csv else None
        )
        zones = parse_zones(config.zones_path.read_text(), centroids_text)
        if not zones:
            raise ValidationError("no zones in input")
        zone_by_id = {z.id: z for z in zones}
        centroids = {z.id: z.centroid for z in zones}
        raw_rows = parse_od_table(config.od_csv.read_text())
        # rows touching unknown zones are commuters in or out of the region;
        # they are counted and excluded, not an error
        internal: list[ODPair] = []
        external: list[ODPair] = []
        for p in raw_rows:
            (internal if p.origin in zone_by_id and p.dest in zone_by_id else external).append(p)
        aggregated = aggregate_bidirectional(internal)
        split = filter_eligible(
            aggregated, centroids, config.max_euclid_km, config.min_commuters
        )
        considered = list(split.eligible) + list(split.intrazonal)
        gender_available = bool(considered) and all(p.has_gender for p in considered)

    # route: fast and quiet per eligible pair
    with _stage("route"):
        rc = config.routing
        client: Optional[RoutingClient] = None
        if rc.backend == "stub":
            elevation_fn = make_elevation_fn(rc.elevation)

            def fetch(origin_id: str, dest_id: str, o: Point, d: Point, profile: str) -> Route:
                return stub_route(
                    origin_id, dest_id, o, d, profile,
                    elevation_fn=elevation_fn, subdivide_deg=rc.subdivide_deg,
                )
        else:
            client = RoutingClient(
                base_url=rc.base_url or "",
                api_key=rc.api_key,
                cache_dir=rc.cache_dir,
                min_interval_s=rc.min_interval_s,
            )
            fetch = client.fetch_route
        try:
            pairs = [
                (p.origin, p.dest, centroids[p.origin], centroids[p.dest])
                for p in split.eligible
            ]
            routes, routing_errors = route_many(pairs, fetch, rc.parallelism)
        finally:
            if client is not None:
                client.close()
        routes_by_key = {(r.origin, r.dest, r.profile): r for r in routes}

    # fit: load coefficients or fit on this region's own eligible pairs
    with _stage("fit"):
        if config.coefficients_path is not None:
            coeffs = ModelCoefficients.from_file(config.coefficients_path)
            fit_info: dict = {"source": "file"}
        else:
            obs = observations_from_ods(
                (
                    routes_by_key[(p.origin, p.dest, "fast")].distance_km,
                    routes_by_key[(p.origin, p.dest, "fast")].gradient_pct,
                    p.all,
                    p.cycle,
                )
                for p in split.eligible
                if (p.origin, p.dest, "fast") in routes_by_key
            )
            coeffs = fit_logistic(obs)
            fit_info = {"source": "fitted", "n_observations": len(obs)}

    # scenarios: per-OD cycling levels and mode shifts
    with _stage("scenarios"):
        scenario_params = (
            ScenarioParams.from_file(config.scenario_params_path)
            if config.scenario_params_path
            else ScenarioParams()
        )
        active = [
            s for s in SCENARIOS if s != "genderequal" or gender_available
        ]
        line_records: list[_LineRecord] = []
        for p in split.eligible:
            fast = routes_by_key.get((p.origin, p.dest, "fast"))
            quiet = routes_by_key.get((p.origin, p.dest, "quiet"))
            if fast is None or quiet is None:
                continue  # recorded routing error; line kept without metrics
            slc = _compute_slc(
                p, fast.distance_km, fast.gradient_pct, coeffs, scenario_params,
                gender_available,
            )
            shifts = {s: apportion_mode_shift(p, slc[s]) for s in active}
            line_records.append(
                _LineRecord(
                    od=p,
                    fast=fast,
                    quiet=quiet,
                    euclid_km=euclidean_km(centroids[p.origin], centroids[p.dest]),
                    slc=slc,
                    shifts=shifts,
                )
            )
        intra_records: list[_IntraRecord] = []
        for p in split.intrazonal:
            d_nominal = intrazonal_nominal_distance(zone_by_id[p.origin])
            slc = _compute_slc(p, d_nominal, 0.0, coeffs, scenario_params, gender_available)
            shifts = {s: apportion_mode_shift(p, slc[s]) for s in active}
            intra_records.append(_IntraRecord(od=p, d_km=d_nominal, slc=slc, shifts=shifts))

    # impacts: health and carbon per OD per scenario
    with _stage("impacts"):
        impact_params = ImpactParams.from_file(
            config.impact_params_path, config.age_profiles_csv
        )
        mortality = parse_mortality_csv(config.mortality_csv.read_text())
        for rec in line_records:
            for s in active:
                if s == "baseline":
                    continue
                rec.impacts[s] = impact_for_od(
                    rec.od,
                    ScenarioResult(rec.od, s, rec.slc[s], rec.shifts[s]),
                    rec.fast.distance_km,
                    impact_params,
                    mortality,
                    area_id=rec.od.origin,
                    godutch_slc=rec.slc["godutch"],
                )
        for intra in intra_records:
            for s in active:
                if s == "baseline":
                    continue
                intra.impacts[s] = impact_for_od(
                    intra.od,
                    ScenarioResult(intra.od, s, intra.slc[s], intra.shifts[s]),
                    intra.d_km,
                    impact_params,
                    mortality,
                    area_id=intra.od.origin,
                    godutch_slc=intra.slc["godutch"],
                )

    # network: overlay fast routes, merge equal-value chains
    with _stage("network"):
        value_routes = [
            (
                rec.fast.coords,
                {SCENARIO_VALUE_NAMES[s]: rec.slc[s] for s in active},
            )
            for rec in line_records
        ]
        atomic = overline(value_routes)
        network = merge_contiguous(atomic)
        seg_totals = weighted_length_totals(atomic)
        # conservation self-check: segment-side totals must match route-side
        route_side = {SCENARIO_VALUE_NAMES[s]: 0.0 for s in active}
        for coords, values in value_routes:
            length = sum(segment_length_km(k) for k in atomize(coords))
            for name, value in values.items():
                route_side[name] += value * length
        for name, total in seg_totals.items():
            ref = route_side[name]
            if abs(total - ref) > 1e-6 * max(1.0, abs(ref)):
                raise ValidationError(
                    f"network volume not conserved for {name}: {total} vs {ref}"
                )

    # stats: diagnostics document
    with _stage("stats"):
        dist_rows = distance_distribution(
            (
                (rec.fast.distance_km, rec.od.all, rec.slc)
                for rec in line_records
            ),
            active,
            config.band_edges_km,
        )
        totals: dict[str, dict[str, float]] = {}
        all_records = [*line_records, *intra_records]
        for s in active:
            slc_total = sum(r.slc[s] for r in all_records)
            entry = {"slc": slc_total}
            if s != "baseline":
                entry["net_deaths_avoided"] = sum(
                    r.impacts[s].net_deaths_avoided for r in all_records
                )
                entry["health_value"] = sum(
                    r.impacts[s].health_value for r in all_records
                )
                entry["co2_saved_kg"] = sum(
                    r.impacts[s].co2_saved_kg for r in all_records
                )
            totals[s] = entry
        circuity_stats: dict[str, Optional[float]] = {
            "fast_mean": None, "quiet_mean": None, "quiet_fast_ratio_mean": None,
        }
        if line_records:
            n_lines = len(line_records)
            circuity_stats = {
                "fast_mean": sum(
                    circuity(r.fast.distance_km, r.euclid_km) for r in line_records
                ) / n_lines,
                "quiet_mean": sum(
                    circuity(r.quiet.distance_km, r.euclid_km) for r in line_records
                ) / n_lines,
                "quiet_fast_ratio_mean": sum(
                    r.quiet.distance_km / r.fast.distance_km for r in line_records
                ) / n_lines,
            }
        bboxes = [z.bbox for z in zones]
        bbox = [
            min(b[0] for b in bboxes), min(b[1] for b in bboxes),
            max(b[2] for b in bboxes), max(b[3] for b in bboxes),
        ]
        stats = {
            "region_id": config.region_id,
            "bbox": bbox,
            "gender_available": gender_available,
            "scenarios": active,
            "counts": {
                "zones": len(zones),
                "od_rows": len(raw_rows),
                "od_rows_external": len(external),
                "external_commuters": sum(p.all for p in external),
                "od_pairs": len(aggregated),
                "eligible": len(split.eligible),
                "intrazonal": len(split.intrazonal),
                "excluded_distance": len(split.excluded_distance),
                "excluded_commuters": len(split.excluded_commuters),
                "routed": len(line_records),
            },
            "coefficients": coeffs.to_dict(),
            "fit": fit_info,
            "scenario_params": scenario_params.to_dict(),
            "totals": {
                "commuters": sum(p.all for p in considered),
                "observed_cycle": sum(p.cycle for p in considered),
                "scenarios": totals,
            },
            "distance_distribution": {
                "band_edges_km": list(config.band_edges_km),
                "rows": dist_rows,
            },
            "circuity": circuity_stats,
            "network": {
                "atomic_segments": len(atomic),
                "merged_segments": len(network),
                "weighted_length_totals": seg_totals,
            },
            "routing_errors": [
                {"origin": o, "dest": d, "profile": pr, "message": m}
                for o, d, pr, m in routing_errors
            ],
        }

    # assemble features
    with _stage("write"):
        zone_totals: dict[str, dict[str, float]] = {
            z.id: {s: 0.0 for s in active} | {"all": 0.0} for z in zones
        }
        intra_by_zone: dict[str, _IntraRecord] = {r.od.origin: r for r in intra_records}
        for rec in line_records:
            for zid in (rec.od.origin, rec.od.dest):
                zone_totals[zid]["all"] += rec.od.all / 2.0
                for s in active:
                    zone_totals[zid][s] += rec.slc[s] / 2.0
        for zid, intra in intra_by_zone.items():
            zone_totals[zid]["all"] += intra.od.all
            for s in active:
                zone_totals[zid][s] += intra.slc[s]

        zone_features = []
        for z in sorted(zones, key=lambda z: z.id):
            intra = intra_by_zone.get(z.id)
            props: dict = {
                "id": z.id,
                "name": z.name,
                "area_km2": z.area_km2,
                "centroid_lon": z.centroid[0],
                "centroid_lat": z.centroid[1],
                "all": zone_totals[z.id]["all"],
            }
            for s in active:
                props[SCENARIO_VALUE_NAMES[s]] = zone_totals[z.id][s]
            props["intrazonal_all"] = float(intra.od.all) if intra else 0.0
            for s in active:
                props[f"intrazonal_{SCENARIO_VALUE_NAMES[s]}"] = (
                    intra.slc[s] if intra else 0.0
                )
            zone_features.append(_feature(dict(z.boundary), props))

        routed_keys = {(r.od.origin, r.od.dest) for r in line_records}
        errored = [
            p for p in split.eligible if (p.origin, p.dest) not in routed_keys
        ]
        line_features = []
        fast_features = []
        quiet_features = []
        for rec in line_records:
            od = rec.od
            fast_c = circuity(rec.fast.distance_km, rec.euclid_km)
            quiet_c = circuity(rec.quiet.distance_km, rec.euclid_km)
            props = {
                "origin": od.origin,
                "dest": od.dest,
                "all": od.all,
                "cycle": od.cycle,
                "walk": od.walk,
                "car": od.car,
                "other": od.other,
                "euclid_km": rec.euclid_km,
                "fast_km": rec.fast.distance_km,
                "quiet_km": rec.quiet.distance_km,
                "gradient_pct": rec.fast.gradient_pct,
                "circuity_fast": fast_c,
                "circuity_quiet": quiet_c,
                "high_circuity": fast_c > CIRCUITY_BENCHMARK,
                "routing_error": None,
            }
            if gender_available:
                props.update(
                    male_all=od.male_all, male_cycle=od.male_cycle,
                    female_all=od.female_all, female_cycle=od.female_cycle,
                )
            for s in active:
                props[SCENARIO_VALUE_NAMES[s]] = rec.slc[s]
                if s == "baseline":
                    continue
                stem = scenario_stem(s)
                impact = rec.impacts[s]
                props[f"{stem}_health_value"] = impact.health_value
                props[f"{stem}_co2_saved"] = impact.co2_saved_kg
                props[f"{stem}_net_deaths"] = impact.net_deaths_avoided
            geometry = {
                "type": "LineString",
                "coordinates": [
                    list(centroids[od.origin]), list(centroids[od.dest])
                ],
            }
            line_features.append(_feature(geometry, props))
            for route, bucket in ((rec.fast, fast_features), (rec.quiet, quiet_features)):
                rprops = {
                    "origin": od.origin,
                    "dest": od.dest,
                    "distance_km": route.distance_km,
                    "gradient_pct": route.gradient_pct,
                    "circuity": circuity(route.distance_km, rec.euclid_km),
                    "high_circuity": circuity(route.distance_km, rec.euclid_km)
                    > CIRCUITY_BENCHMARK,
                }
                for s in active:
                    rprops[SCENARIO_VALUE_NAMES[s]] = rec.slc[s]
                bucket.append(
                    _feature(
                        {
                            "type": "LineString",
                            "coordinates": [list(c) for c in route.coords],
                        },
                        rprops,
                    )
                )
        for p in errored:
            message = "; ".join(
                m for o, d, _pr, m in routing_errors if (o, d) == (p.origin, p.dest)
            )
            props = {
                "origin": p.origin,
                "dest": p.dest,
                "all": p.all,
                "cycle": p.cycle,
                "walk": p.walk,
                "car": p.car,
                "other": p.other,
                "euclid_km": euclidean_km(centroids[p.origin], centroids[p.dest]),
                "routing_error": message or "routing failed",
            }
            geometry = {
                "type": "LineString",
                "coordinates": [list(centroids[p.origin]), list(centroids[p.dest])],
            }
            line_features.append(_feature(geometry, props))
        line_features.sort(
            key=lambda f: (f["properties"]["origin"], f["properties"]["dest"])
        )

        bundle = RegionBundle(
            region_id=config.region_id,
            zones=_collection(zone_features),
            lines=_collection(line_features),
            fast_routes=_collection(fast_features),
            quiet_routes=_collection(quiet_features),
            network=network_geojson(network),
            stats=stats,
            manifest={},
        )

        input_hashes = {"od_csv": _sha256_file(config.od_csv),
                        "zones": _sha256_file(config.zones_path),
                        "mortality_csv": _sha256_file(config.mortality_csv),
                        "age_profiles_csv": _sha256_file(config.age_profiles_csv),
                        "impact_params": _sha256_file(config.impact_params_path)}
        if config.centroids_csv:
            input_hashes["centroids_csv"] = _sha256_file(config.centroids_csv)
        if config.coefficients_path:
            input_hashes["coefficients"] = _sha256_file(config.coefficients_path)
        if config.scenario_params_path:
            input_hashes["scenario_params"] = _sha256_file(config.scenario_params_path)

        final_dir = config.out_dir / config.region_id
        tmp_dir = config.out_dir / f".{config.region_id}.building"
        if tmp_dir.exists():
            shutil.rmtree(tmp_dir)
        tmp_dir.mkdir(parents=True)
        try:
            artifact_hashes = {}
            for name, filename in ARTIFACT_FILES.items():
                text = _dump_json(getattr(bundle, name))
                (tmp_dir / filename).write_text(text)
                artifact_hashes[filename] = _sha256_bytes(text.encode())
            manifest = {
                "region_id": config.region_id,
                "inputs": input_hashes,
                "artifacts": artifact_hashes,
            }
            (tmp_dir / MANIFEST_FILE).write_text(_dump_json(manifest))
            bundle.manifest = manifest
            if final_dir.exists():
                shutil.rmtree(final_dir)
            os.replace(tmp_dir, final_dir)
        except Exception:
            shutil.rmtree(tmp_dir, ignore_errors=True)
            raise
    return bundle


def fit_from_cached_routes(
    od_text: str, routes_dir: str | Path, max_d_km: float = 30.0
) -> tuple[ModelCoefficients, int, int]:
    """Fit the distance-decay model from an OD table and a route cache.

    Returns (coefficients, observations used, pairs skipped for having no
    cached fast route). Intrazonal pairs never enter the fit.
    """
    routes_dir = Path(routes_dir)
    pairs = aggregate_bidirectional(parse_od_table(od_text))
    records = []
    skipped = 0
    for p in pairs:
        if p.intrazonal:
            continue
        path = routes_dir / cache_filename(p.origin, p.dest, "fast")
        if not path.exists():
            skipped += 1
            continue
        d_km, h_pct = read_route_metrics(path)
        records.append((d_km, h_pct, p.all, p.cycle))
    obs = observations_from_ods(records, max_d_km)
    return fit_logistic(obs), len(obs), skipped


def route_to_cache(
    od_text: str,
    zones_text: str,
    cache_dir: str | Path,
    backend: str = "stub",
    centroids_csv: Optional[str] = None,
    base_url: Optional[str] = None,
    api_key: Optional[str] = None,
    min_interval_s: float = 0.0,
    parallelism: int = 4,
    max_euclid_km: float = DEFAULT_MAX_EUCLID_KM,
    min_commuters: int = DEFAULT_MIN_COMMUTERS,
    elevation: Optional[Mapping] = None,
    subdivide_deg: Optional[float] = None,
) -> tuple[int, list[tuple[str, str, str, str]]]:
    """Route every eligible pair and persist response documents to a cache dir.

    Returns (routes written, per-OD errors). With the stub backend the
    documents are synthesized locally; with the service backend they come
    from the wire (and the client caches them itself).
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    zones = parse_zones(zones_text, centroids_csv)
    centroids = {z.id: z.centroid for z in zones}
    known = set(centroids)
    rows = [
        p for p in parse_od_table(od_text) if p.origin in known and p.dest in known
    ]
    split = filter_eligible(
        aggregate_bidirectional(rows), centroids, max_euclid_km, min_commuters
    )
    pairs = [
        (p.origin, p.dest, centroids[p.origin], centroids[p.dest])
        for p in split.eligible
    ]
    client: Optional[RoutingClient] = None
    if backend == "stub":
        elevation_fn = make_elevation_fn(elevation)

        def fetch(origin_id: str, dest_id: str, o: Point, d: Point, profile: str) -> Route:
            route = stub_route(
                origin_id, dest_id, o, d, profile,
                elevation_fn=elevation_fn, subdivide_deg=subdivide_deg,
            )
            path = cache_dir / cache_filename(origin_id, dest_id, profile)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(json.dumps(route_document(route), sort_keys=True))
            tmp.replace(path)
            return route
    elif backend == "service":
        if not base_url:
            raise ValidationError("service backend needs --base-url")
        client = RoutingClient(
            base_url=base_url, api_key=api_key, cache_dir=cache_dir,
            min_interval_s=min_interval_s,
        )
        fetch = client.fetch_route
    else:
        raise ValidationError(f"unknown backend {backend!r}")
    try:
        routes, errors = route_many(pairs, fetch, parallelism)
    finally:
        if client is not None:
            client.close()
    return len(routes), errors

"""Command-line interface: build, fit, route, stats, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core_data import (
    DEFAULT_MAX_EUCLID_KM,
    DEFAULT_MIN_COMMUTERS,
    ValidationError,
)
from .mode_model import MAX_FIT_DISTANCE_KM, FitError
from .region_pipeline import (
    PipelineConfig,
    PipelineError,
    RegionBundle,
    build_region,
    fit_from_cached_routes,
    route_to_cache,
)
from .routing import RoutingError


def _cmd_build(args: argparse.Namespace) -> int:
    config = PipelineConfig.from_file(args.config)
    bundle = build_region(config)
    counts = bundle.stats["counts"]
    print(
        f"built region {bundle.region_id}: {counts['zones']} zones, "
        f"{counts['eligible']} eligible pairs ({counts['routed']} routed), "
        f"{counts['intrazonal']} intrazonal"
    )
    print(f"bundle: {config.out_dir / bundle.region_id}")
    return 1 if bundle.stats["routing_errors"] else 0


def _cmd_fit(args: argparse.Namespace) -> int:
    coeffs, n_obs, skipped = fit_from_cached_routes(
        Path(args.od).read_text(), args.routes, args.max_distance_km
    )
    coeffs.to_file(args.out)
    print(f"fitted on {n_obs} observations; {skipped} pairs had no cached fast route")
    print(f"coefficients: {args.out}")
    return 0


def _cmd_route(args: argparse.Namespace) -> int:
    elevation = None
    if args.elevation_amplitude_m is not None:
        elevation = {
            "amplitude_m": args.elevation_amplitude_m,
            "wavelength_deg": args.elevation_wavelength_deg,
        }
    centroids = Path(args.centroids).read_text() if args.centroids else None
    written, errors = route_to_cache(
        Path(args.od).read_text(),
        Path(args.zones).read_text(),
        args.cache_dir,
        backend=args.backend,
        centroids_csv=centroids,
        base_url=args.base_url,
        api_key=args.api_key,
        min_interval_s=args.min_interval_s,
        parallelism=args.parallelism,
        max_euclid_km=args.max_euclid_km,
        min_commuters=args.min_commuters,
        elevation=elevation,
        subdivide_deg=args.subdivide_deg,
    )
    print(f"wrote {written} routes to {args.cache_dir}")
    for origin, dest, profile, message in errors:
        print(f"error: {origin}->{dest} ({profile}): {message}", file=sys.stderr)
    return 1 if errors else 0


def _cmd_stats(args: argparse.Namespace) -> int:
    bundle = RegionBundle.load(args.bundle)
    s = bundle.stats
    counts = s["counts"]
    print(f"region {s['region_id']}")
    print(
        f"  zones {counts['zones']}, OD rows {counts['od_rows']} "
        f"({counts['od_rows_external']} external), pairs {counts['od_pairs']}"
    )
    print(
        f"  eligible {counts['eligible']}, intrazonal {counts['intrazonal']}, "
        f"excluded: {counts['excluded_distance']} by distance, "
        f"{counts['excluded_commuters']} by commuter count"
    )
    print(f"  gender data: {'yes' if s['gender_available'] else 'no'}")
    circ = s["circuity"]
    if circ["fast_mean"] is not None:
        print(
            f"  circuity: fast {circ['fast_mean']:.3f}, quiet {circ['quiet_mean']:.3f}, "
            f"quiet/fast {circ['quiet_fast_ratio_mean']:.3f}"
        )
    print(f"  commuters {s['totals']['commuters']}, observed cyclists "
          f"{s['totals']['observed_cycle']}")
    for scenario, totals in s["totals"]["scenarios"].items():
        line = f"  {scenario}: slc {totals['slc']:.1f}"
        if "health_value" in totals:
            line += (
                f", net deaths avoided {totals['net_deaths_avoided']:.4f}/yr, "
                f"value {totals['health_value']:.0f}/yr, "
                f"CO2 saved {totals['co2_saved_kg']:.0f} kg/yr"
            )
        print(line)
    if s["routing_errors"]:
        print(f"  routing errors: {len(s['routing_errors'])}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api_service import create_app

    app = create_app(args.bundles, args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cycleplan",
        description="Cycling uptake planning: build region bundles and serve map layers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="run the full pipeline from a config file")
    p_build.add_argument("--config", required=True, help="path to a build config (JSON)")
    p_build.set_defaults(func=_cmd_build)

    p_fit = sub.add_parser("fit", help="fit the uptake model from an OD table and route cache")
    p_fit.add_argument("--od", required=True, help="OD CSV path")
    p_fit.add_argument("--routes", required=True, help="route cache directory")
    p_fit.add_argument("--out", required=True, help="output coefficients file")
    p_fit.add_argument(
        "--max-distance-km", type=float, default=MAX_FIT_DISTANCE_KM,
        help="exclude trips at or beyond this route distance (default %(default)s)",
    )
    p_fit.set_defaults(func=_cmd_fit)

    p_route = sub.add_parser("route", help="route eligible OD pairs into a cache directory")
    p_route.add_argument("--od", required=True, help="OD CSV path")
    p_route.add_argument("--zones", required=True, help="zones GeoJSON path")
    p_route.add_argument("--centroids", help="optional centroid CSV path")
    p_route.add_argument("--backend", choices=("service", "stub"), default="stub")
    p_route.add_argument("--cache-dir", required=True, help="where route documents land")
    p_route.add_argument("--base-url", help="routing service base URL (service backend)")
    p_route.add_argument("--api-key", help="routing service API key")
    p_route.add_argument("--min-interval-s", type=float, default=0.0,
                         help="minimum seconds between service requests")
    p_route.add_argument("--parallelism", type=int, default=4)
    p_route.add_argument("--max-euclid-km", type=float, default=DEFAULT_MAX_EUCLID_KM)
    p_route.add_argument("--min-commuters", type=int, default=DEFAULT_MIN_COMMUTERS)
    p_route.add_argument("--elevation-amplitude-m", type=float,
                         help="synthetic terrain amplitude for the stub backend")
    p_route.add_argument("--elevation-wavelength-deg", type=float, default=0.02)
    p_route.add_argument("--subdivide-deg", type=float,
                         help="stub vertex spacing so shared corridors share vertices")
    p_route.set_defaults(func=_cmd_route)

    p_stats = sub.add_parser("stats", help="summarize a built bundle")
    p_stats.add_argument("--bundle", required=True, help="bundle directory")
    p_stats.set_defaults(func=_cmd_stats)

    p_serve = sub.add_parser("serve", help="serve bundles over HTTP")
    p_serve.add_argument("--bundles", required=True, help="directory of region bundles")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--static", help="optional static file root for the map UI")
    p_serve.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FitError, RoutingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Read-only HTTP service over built region bundles.

Bundles load once at startup into immutable in-memory documents; every
request is answered from those, so concurrent handling needs no locking
and any sequence of requests returns identical results. Layer responses
are GeoJSON FeatureCollections whose property names are part of the wire
contract (see README).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .region_pipeline import (
    MANIFEST_FILE,
    RANK_KEYS,
    SCENARIO_VALUE_NAMES,
    RegionBundle,
    rank_lines,
)

LAYERS = (
    "zones",
    "straight_lines",
    "fast_routes",
    "quiet_routes",
    "network",
    "centroids",
)

# Layers made of one feature per OD pair; the only ones top-n and ordering
# apply to.
LINE_LAYERS = ("straight_lines", "fast_routes", "quiet_routes")


def load_bundles(bundle_dir: str | Path) -> dict[str, RegionBundle]:
    """Load every bundle below bundle_dir, keyed and ordered by region id."""
    bundle_dir = Path(bundle_dir)
    bundles: dict[str, RegionBundle] = {}
    if not bundle_dir.exists():
        return bundles
    for child in sorted(bundle_dir.iterdir()):
        if child.is_dir() and (child / MANIFEST_FILE).exists():
            bundle = RegionBundle.load(child)
            bundles[bundle.region_id] = bundle
    return dict(sorted(bundles.items()))


def _centroid_collection(zones: dict) -> dict:
    features = []
    for feature in zones.get("features", []):
        props = dict(feature.get("properties") or {})
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [props["centroid_lon"], props["centroid_lat"]],
                },
                "properties": props,
            }
        )
    return {"type": "FeatureCollection", "features": features}


def create_app(
    bundle_dir: str | Path, static_root: Optional[str | Path] = None
) -> FastAPI:
    bundles = load_bundles(bundle_dir)
    centroid_layers = {
        rid: _centroid_collection(b.zones) for rid, b in bundles.items()
    }
    app = FastAPI(title="cycleplan service", docs_url=None, redoc_url=None)

    def get_bundle(region_id: str) -> RegionBundle:
        bundle = bundles.get(region_id)
        if bundle is None:
            raise HTTPException(status_code=404, detail=f"unknown region {region_id!r}")
        return bundle

    @app.get("/regions")
    def regions() -> list[dict]:
        return [
            {
                "region_id": rid,
                "bbox": b.stats["bbox"],
                "scenarios": b.stats["scenarios"],
                "gender_available": b.stats["gender_available"],
            }
            for rid, b in bundles.items()
        ]

    @app.get("/regions/{region_id}/layer")
    def layer(
        region_id: str,
        layer: str,
        scenario: str = "baseline",
        n: Optional[int] = None,
        order_by: Optional[str] = None,
        download: int = 0,
    ):
        bundle = get_bundle(region_id)
        if layer not in LAYERS:
            raise HTTPException(status_code=404, detail=f"unknown layer {layer!r}")
        if scenario not in SCENARIO_VALUE_NAMES:
            raise HTTPException(status_code=400, detail=f"unknown scenario {scenario!r}")
        if scenario not in bundle.stats["scenarios"]:
            raise HTTPException(
                status_code=400,
                detail=f"scenario {scenario!r} unavailable for region {region_id!r}",
            )
        if order_by is not None and order_by not in RANK_KEYS:
            raise HTTPException(
                status_code=400,
                detail=f"order_by must be one of {RANK_KEYS}, got {order_by!r}",
            )
        if (n is not None or order_by is not None) and layer not in LINE_LAYERS:
            raise HTTPException(
                status_code=400,
                detail="top-n and ordering apply only to line layers",
            )
        if order_by is not None and order_by != "slc" and scenario == "baseline":
            raise HTTPException(
                status_code=400,
                detail=f"order_by={order_by} is undefined for the baseline",
            )
        if n is not None and n < 1:
            raise HTTPException(status_code=400, detail="n must be >= 1")

        if layer == "zones":
            doc = bundle.zones
        elif layer == "centroids":
            doc = centroid_layers[region_id]
        elif layer == "straight_lines":
            doc = bundle.lines
        elif layer == "fast_routes":
            doc = bundle.fast_routes
        elif layer == "quiet_routes":
            doc = bundle.quiet_routes
        else:
            doc = bundle.network
        if layer in LINE_LAYERS and (n is not None or order_by is not None):
            features = rank_lines(
                doc["features"],
                scenario,
                order_by or "slc",
                n if n is not None else len(doc["features"]),
            )
            doc = {"type": "FeatureCollection", "features": features}
        if download:
            return JSONResponse(
                content=doc,
                headers={
                    "Content-Disposition": (
                        f'attachment; filename="{region_id}_{layer}.geojson"'
                    )
                },
            )
        return doc

    @app.get("/regions/{region_id}/stats")
    def stats(region_id: str) -> dict:
        return get_bundle(region_id).stats

    if static_root is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_root, html=True), name="ui")
    return app

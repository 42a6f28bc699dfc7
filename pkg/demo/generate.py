#!/usr/bin/env python3
"""Regenerate the synthetic demo region (deterministic; inputs are checked in).

Six grid zones, commute counts with a distance-decaying cycling share, a
gender split, and per-zone mortality rates. Run from anywhere:

    python3 demo/generate.py
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

HERE = Path(__file__).parent

COLS, ROWS = 3, 2
SIZE_DEG = 0.02
LON0, LAT0 = -1.60, 53.78

COEFFS = {
    "alpha": -0.8,
    "beta_d": -0.35,
    "beta_sqrt_d": 0.6,
    "beta_d2": 0.0045,
    "gamma_h": -0.25,
    "gamma_dh": 0.011,
    "gamma_sqrtdh": -0.09,
}

SCENARIO_PARAMS = {
    "gd_main": 2.5,
    "gd_dist": -0.07,
    "eb_main": 0.7,
    "eb_dist": 0.05,
    "eb_hill": 0.12,
}


def zone_id(col: int, row: int) -> str:
    return f"Z{row * COLS + col + 1:02d}"


def centroid(col: int, row: int) -> tuple[float, float]:
    return (LON0 + (col + 0.5) * SIZE_DEG, LAT0 + (row + 0.5) * SIZE_DEG)


def euclid_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    # close enough for synthetic counts; the pipeline recomputes properly
    kx = 111.32 * math.cos(math.radians((a[1] + b[1]) / 2))
    ky = 110.57
    return math.hypot((a[0] - b[0]) * kx, (a[1] - b[1]) * ky)


def make_zones() -> dict:
    features = []
    for row in range(ROWS):
        for col in range(COLS):
            lon, lat = LON0 + col * SIZE_DEG, LAT0 + row * SIZE_DEG
            ring = [
                [lon, lat],
                [lon + SIZE_DEG, lat],
                [lon + SIZE_DEG, lat + SIZE_DEG],
                [lon, lat + SIZE_DEG],
                [lon, lat],
            ]
            clon, clat = centroid(col, row)
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {
                        "id": zone_id(col, row),
                        "name": f"Demoville {zone_id(col, row)}",
                        "centroid_lon": clon,
                        "centroid_lat": clat,
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}


def make_od(rng: random.Random) -> str:
    cells = [(c, r) for r in range(ROWS) for c in range(COLS)]
    rows = ["origin,dest,all,cycle,walk,car,other,male_all,male_cycle,female_all,female_cycle"]

    def counts(total: int, d_km: float) -> tuple[int, int, int, int]:
        p_cycle = 0.13 * math.exp(-0.38 * d_km)
        cycle = sum(1 for _ in range(total) if rng.random() < p_cycle)
        rest = total - cycle
        p_walk = max(0.05, 0.4 - 0.12 * d_km)
        walk = sum(1 for _ in range(rest) if rng.random() < p_walk)
        car = sum(1 for _ in range(rest - walk) if rng.random() < 0.75)
        other = rest - walk - car
        return cycle, walk, car, other

    def gender(total: int, cycle: int) -> tuple[int, int, int, int]:
        male_all = sum(1 for _ in range(total) if rng.random() < 0.52)
        male_all = min(max(male_all, 0), total)
        lo = max(0, cycle - (total - male_all))
        hi = min(cycle, male_all)
        male_cycle = min(max(int(round(cycle * 0.58)), lo), hi)
        return male_all, male_cycle, total - male_all, cycle - male_cycle

    for i, a in enumerate(cells):
        for b in cells[i:]:
            ca, cb = centroid(*a), centroid(*b)
            if a == b:
                total = rng.randint(60, 140)
                d = 0.9
            else:
                d = euclid_km(ca, cb)
                total = rng.randint(25, 240)
            cycle, walk, car, other = counts(total, d)
            male_all, male_cycle, female_all, female_cycle = gender(total, cycle)
            rows.append(
                f"{zone_id(*a)},{zone_id(*b)},{total},{cycle},{walk},{car},{other},"
                f"{male_all},{male_cycle},{female_all},{female_cycle}"
            )
    return "\n".join(rows) + "\n"


def make_mortality() -> str:
    rows = ["area_id,sex,age_min,age_max,annual_rate"]
    for row in range(ROWS):
        for col in range(COLS):
            zid = zone_id(col, row)
            base = 0.0008 + 0.00007 * (row * COLS + col)
            for sex, factor in (("male", 1.25), ("female", 1.0)):
                rows.append(f"{zid},{sex},20,44,{base * factor:.6f}")
                rows.append(f"{zid},{sex},45,64,{base * factor * 3.4:.6f}")
    return "\n".join(rows) + "\n"


def main() -> None:
    rng = random.Random(20240601)
    (HERE / "zones.geojson").write_text(json.dumps(make_zones(), indent=2) + "\n")
    (HERE / "od.csv").write_text(make_od(rng))
    (HERE / "mortality.csv").write_text(make_mortality())
    (HERE / "coefficients.json").write_text(json.dumps(COEFFS, indent=2, sort_keys=True) + "\n")
    (HERE / "scenario_params.json").write_text(
        json.dumps(SCENARIO_PARAMS, indent=2, sort_keys=True) + "\n"
    )
    package_data = HERE.parent / "src" / "cycleplan" / "data"
    (HERE / "impact_params.json").write_text(
        (package_data / "impact_params.json").read_text()
    )
    (HERE / "age_profiles.csv").write_text((package_data / "age_profiles.csv").read_text())
    config = {
        "region_id": "demoville",
        "od_csv": "od.csv",
        "zones": "zones.geojson",
        "mortality_csv": "mortality.csv",
        "age_profiles_csv": "age_profiles.csv",
        "impact_params": "impact_params.json",
        "coefficients": "coefficients.json",
        "scenario_params": "scenario_params.json",
        "max_euclid_km": 20.0,
        "min_commuters": 10,
        "routing": {
            "backend": "stub",
            "subdivide_deg": 0.005,
            "elevation": {"amplitude_m": 25.0, "wavelength_deg": 0.05},
        },
        "out_dir": "bundles",
    }
    (HERE / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"demo inputs written to {HERE}")


if __name__ == "__main__":
    main()

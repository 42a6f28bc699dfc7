"""Shared fixtures: synthetic grid regions with model-generated cycling."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from cycleplan.core_data import euclidean_km
from cycleplan.mode_model import ModelCoefficients, predict_pcycle
from cycleplan.region_pipeline import PipelineConfig, build_region

# Verdict lines for tests tagged @pytest.mark.criterion(...) go through the
# terminal reporter, the one stream pytest's output capture never swallows.
# The reporter is looked up lazily: it does not exist yet when conftest
# configuration hooks run.
_CONFIG = None


def pytest_configure(config):
    global _CONFIG
    config.addinivalue_line(
        "markers", "criterion(name): print a PASS/FAIL verdict line for this check"
    )
    _CONFIG = config


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and (report.when == "call" or (report.when == "setup" and not report.passed)):
        report.criterion_name = marker.args[0]


@pytest.hookimpl(trylast=True)
def pytest_runtest_logreport(report):
    name = getattr(report, "criterion_name", None)
    if name is None or _CONFIG is None:
        return
    reporter = _CONFIG.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(f"{'PASS' if report.passed else 'FAIL'}  {name}")

# Ground-truth coefficients used to simulate cycling counts. The shape is a
# short-distance rise followed by decay, with hilliness suppressing uptake.
TRUE_COEFFS = ModelCoefficients(
    alpha=-0.8,
    beta_d=-0.35,
    beta_sqrt_d=0.6,
    beta_d2=0.0045,
    gamma_h=-0.25,
    gamma_dh=0.011,
    gamma_sqrtdh=-0.09,
)

IMPACT_PARAM_VALUES = {
    "speed_cycle": 14.0,
    "speed_walk": 5.3,
    "speed_ebike": 15.5,
    "rr_cycle": 0.9,
    "rr_walk": 0.89,
    "ref_min_cycle": 100.0,
    "ref_min_walk": 168.0,
    "benefit_cap": 2.0,
    "ebike_benefit_scale": 0.9,
    "vsl": 1900000.0,
    "commute_trips_per_week": 10.0,
    "weeks_per_year": 45.6,
    "co2_kg_per_km": 0.186,
}

SCENARIO_PARAM_VALUES = {
    "gd_main": 2.5,
    "gd_dist": -0.07,
    "eb_main": 0.7,
    "eb_dist": 0.05,
    "eb_hill": 0.12,
}


def zone_id(index: int) -> str:
    return f"Z{index + 1:02d}"


def make_zone_grid(
    cols: int, rows: int, size_deg: float = 0.02, lon0: float = -1.6, lat0: float = 53.78
) -> tuple[dict, dict[str, tuple[float, float]]]:
    """Square-cell zone grid as GeoJSON plus its centroid map."""
    features = []
    centroids: dict[str, tuple[float, float]] = {}
    for row in range(rows):
        for col in range(cols):
            zid = zone_id(row * cols + col)
            lon, lat = lon0 + col * size_deg, lat0 + row * size_deg
            ring = [
                [lon, lat],
                [lon + size_deg, lat],
                [lon + size_deg, lat + size_deg],
                [lon, lat + size_deg],
                [lon, lat],
            ]
            c = (lon + size_deg / 2.0, lat + size_deg / 2.0)
            centroids[zid] = c
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {
                        "id": zid,
                        "name": f"Zone {zid}",
                        "centroid_lon": c[0],
                        "centroid_lat": c[1],
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}, centroids


def draw_modes(
    rng: np.random.Generator,
    n_all: int,
    d_km: float,
    h_pct: float = 0.0,
    coeffs: ModelCoefficients = TRUE_COEFFS,
) -> tuple[int, int, int, int]:
    """Counts (cycle, walk, car, other) with cycling from the true model."""
    p = predict_pcycle(coeffs, d_km, h_pct)
    cycle = int(rng.binomial(n_all, p))
    rest = n_all - cycle
    walk = int(rng.binomial(rest, max(0.05, 0.4 - 0.1 * d_km)))
    car = int(rng.binomial(rest - walk, 0.75))
    other = rest - walk - car
    return cycle, walk, car, other


def draw_gender(
    rng: np.random.Generator, n_all: int, cycle: int
) -> tuple[int, int, int, int]:
    """Consistent (male_all, male_cycle, female_all, female_cycle) split."""
    male_all = int(rng.binomial(n_all, 0.52))
    male_cycle = (
        int(rng.hypergeometric(male_all, n_all - male_all, cycle)) if cycle else 0
    )
    return male_all, male_cycle, n_all - male_all, cycle - male_cycle


def make_od_csv(
    centroids: dict[str, tuple[float, float]],
    seed: int = 7,
    with_gender: bool = True,
    n_range: tuple[int, int] = (30, 280),
    intrazonal_d_km: float = 0.9,
    coeffs: ModelCoefficients = TRUE_COEFFS,
) -> str:
    """OD table over every unordered zone pair plus intrazonal rows."""
    rng = np.random.default_rng(seed)
    header = "origin,dest,all,cycle,walk,car,other"
    if with_gender:
        header += ",male_all,male_cycle,female_all,female_cycle"
    rows = [header]
    ids = sorted(centroids)
    for i, a in enumerate(ids):
        for b in ids[i:]:
            d = intrazonal_d_km if a == b else euclidean_km(centroids[a], centroids[b])
            n_all = int(rng.integers(n_range[0], n_range[1]))
            cycle, walk, car, other = draw_modes(rng, n_all, d, coeffs=coeffs)
            row = f"{a},{b},{n_all},{cycle},{walk},{car},{other}"
            if with_gender:
                row += ",{},{},{},{}".format(*draw_gender(rng, n_all, cycle))
            rows.append(row)
    return "\n".join(rows) + "\n"


def make_mortality_csv(zone_ids: list[str]) -> str:
    rows = ["area_id,sex,age_min,age_max,annual_rate"]
    for i, zid in enumerate(sorted(zone_ids)):
        base = 0.0008 + 0.00006 * i
        for sex, factor in (("male", 1.25), ("female", 1.0)):
            rows.append(f"{zid},{sex},20,44,{base * factor:.6f}")
            rows.append(f"{zid},{sex},45,64,{base * factor * 3.4:.6f}")
    return "\n".join(rows) + "\n"


AGE_PROFILES_CSV = """scenario,sex,age_min,age_max,weight
govtarget,male,20,44,0.42
govtarget,male,45,64,0.21
govtarget,female,20,44,0.25
govtarget,female,45,64,0.12
genderequal,male,20,44,0.35
genderequal,male,45,64,0.17
genderequal,female,20,44,0.32
genderequal,female,45,64,0.16
godutch,male,20,44,0.30
godutch,male,45,64,0.21
godutch,female,20,44,0.29
godutch,female,45,64,0.20
ebikes,male,20,44,0.28
ebikes,male,45,64,0.23
ebikes,female,20,44,0.27
ebikes,female,45,64,0.22
"""


def write_region_inputs(
    base: Path,
    cols: int = 3,
    rows: int = 2,
    seed: int = 7,
    with_gender: bool = True,
    region_id: str = "testville",
    fit_model: bool = False,
    subdivide_deg: float | None = 0.005,
    elevation: dict | None = None,
    out_dir: str = "bundles",
) -> Path:
    """Write a full, valid input set under base; returns the config path."""
    base.mkdir(parents=True, exist_ok=True)
    zones, centroids = make_zone_grid(cols, rows)
    (base / "zones.geojson").write_text(json.dumps(zones))
    (base / "od.csv").write_text(make_od_csv(centroids, seed, with_gender))
    (base / "mortality.csv").write_text(make_mortality_csv(list(centroids)))
    (base / "age_profiles.csv").write_text(AGE_PROFILES_CSV)
    (base / "impact_params.json").write_text(json.dumps(IMPACT_PARAM_VALUES))
    (base / "scenario_params.json").write_text(json.dumps(SCENARIO_PARAM_VALUES))
    config: dict = {
        "region_id": region_id,
        "od_csv": "od.csv",
        "zones": "zones.geojson",
        "mortality_csv": "mortality.csv",
        "age_profiles_csv": "age_profiles.csv",
        "impact_params": "impact_params.json",
        "scenario_params": "scenario_params.json",
        "out_dir": out_dir,
        "routing": {"backend": "stub"},
    }
    if subdivide_deg is not None:
        config["routing"]["subdivide_deg"] = subdivide_deg
    if elevation is not None:
        config["routing"]["elevation"] = elevation
    if fit_model:
        config["fit_model"] = True
    else:
        TRUE_COEFFS.to_file(base / "coefficients.json")
        config["coefficients"] = "coefficients.json"
    config_path = base / "config.json"
    config_path.write_text(json.dumps(config))
    return config_path


@pytest.fixture(scope="session")
def built_region(tmp_path_factory) -> Path:
    """One built bundle directory, shared across service and pipeline tests."""
    base = tmp_path_factory.mktemp("region")
    config_path = write_region_inputs(
        base, elevation={"amplitude_m": 25.0, "wavelength_deg": 0.05}
    )
    build_region(PipelineConfig.from_file(config_path))
    return base / "bundles"

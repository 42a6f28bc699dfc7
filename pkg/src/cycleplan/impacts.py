"""Health and carbon impact estimates for scenario mode shifts.

The health side follows the standard comparative-risk recipe: weekly active
minutes scaled against a reference volume, capped, multiplied by a relative
risk reduction and a blended mortality rate. Cycling gains are offset by the
harm from displaced walking. Monetization multiplies net deaths avoided by a
value of a statistical life. Carbon savings come from displaced car
kilometres at a fixed emission factor.

All values are annual steady-state quantities. Nothing here mutates inputs,
so the per-OD computation is safe to parallelize.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .core_data import MortalityTable, ODPair, ValidationError
from .scenarios import ScenarioResult

# Scalar keys expected in a parameter file, in no particular order.
_SCALAR_KEYS = (
    "speed_cycle",
    "speed_walk",
    "speed_ebike",
    "rr_cycle",
    "rr_walk",
    "ref_min_cycle",
    "ref_min_walk",
    "benefit_cap",
    "ebike_benefit_scale",
    "vsl",
    "commute_trips_per_week",
    "weeks_per_year",
    "co2_kg_per_km",
)

_PROFILE_HEADER = ("scenario", "sex", "age_min", "age_max", "weight")


@dataclass(frozen=True)
class ProfileCell:
    """One (sex, age band) weight inside a cyclist age profile."""

    sex: str
    age_min: int
    age_max: int
    weight: float

    def __post_init__(self) -> None:
        if self.sex not in ("male", "female"):
            raise ValidationError(f"profile sex must be male or female, got {self.sex!r}")
        if self.age_min > self.age_max:
            raise ValidationError(
                f"profile band {self.age_min}-{self.age_max} is reversed"
            )
        if not (0.0 <= self.weight <= 1.0) or not math.isfinite(self.weight):
            raise ValidationError(f"profile weight {self.weight} outside [0, 1]")


AgeProfile = tuple[ProfileCell, ...]


def _check_profile(scenario: str, cells: AgeProfile) -> AgeProfile:
    total = sum(c.weight for c in cells)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(
            f"age profile for {scenario!r} sums to {total}, expected 1"
        )
    return cells


@dataclass(frozen=True)
class ImpactParams:
    """Configuration for the health and carbon calculations.

    Relative risks are per reference volume of weekly activity; the benefit
    multiplier min(minutes/reference, cap) scales them. Ebike minutes get
    their own speed and a reduced benefit via ebike_benefit_scale.
    """

    speed_cycle: float
    speed_walk: float
    speed_ebike: float
    rr_cycle: float
    rr_walk: float
    ref_min_cycle: float
    ref_min_walk: float
    benefit_cap: float
    vsl: float
    commute_trips_per_week: float
    weeks_per_year: float
    ebike_benefit_scale: float = 1.0
    co2_kg_per_km: float = 0.186
    cyclist_age_profile: Mapping[str, AgeProfile] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("speed_cycle", "speed_walk", "speed_ebike"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("rr_cycle", "rr_walk"):
            rr = getattr(self, name)
            if not (0.0 < rr < 1.0):
                raise ValidationError(f"{name} must lie in (0, 1), got {rr}")
        for name in ("ref_min_cycle", "ref_min_walk", "benefit_cap",
                     "commute_trips_per_week", "weeks_per_year"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not (0.0 < self.ebike_benefit_scale <= 1.0):
            raise ValidationError(
                f"ebike_benefit_scale must lie in (0, 1], got {self.ebike_benefit_scale}"
            )
        if self.co2_kg_per_km < 0 or not math.isfinite(self.co2_kg_per_km):
            raise ValidationError("co2_kg_per_km must be finite and non-negative")
        if self.vsl < 0:
            raise ValidationError("vsl must be non-negative")
        for scenario, cells in self.cyclist_age_profile.items():
            _check_profile(scenario, tuple(cells))

    @classmethod
    def from_file(
        cls, path: str | Path, profile_path: Optional[str | Path] = None
    ) -> "ImpactParams":
        """Load scalar parameters from JSON, optionally with a profile CSV."""
        data = json.loads(Path(path).read_text())
        unknown = set(data) - set(_SCALAR_KEYS)
        if unknown:
            raise ValidationError(f"unknown impact parameter keys: {sorted(unknown)}")
        profiles: dict[str, AgeProfile] = {}
        if profile_path is not None:
            profiles = parse_age_profiles(Path(profile_path).read_text())
        return cls(cyclist_age_profile=profiles, **{k: float(v) for k, v in data.items()})

    def profile_for(self, scenario: str) -> AgeProfile:
        try:
            return self.cyclist_age_profile[scenario]
        except KeyError:
            raise ValidationError(f"no cyclist age profile for scenario {scenario!r}")


def parse_age_profiles(text: str) -> dict[str, AgeProfile]:
    """Parse `scenario,sex,age_min,age_max,weight` CSV into per-scenario profiles."""
    rows = [r for r in csv.reader(text.splitlines()) if r]
    if not rows or tuple(rows[0]) != _PROFILE_HEADER:
        raise ValidationError(
            f"age profile header must be {','.join(_PROFILE_HEADER)}"
        )
    grouped: dict[str, list[ProfileCell]] = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(_PROFILE_HEADER):
            raise ValidationError(f"age profile line {line_no}: wrong field count")
        scenario, sex, lo, hi, w = row
        try:
            cell = ProfileCell(sex, int(lo), int(hi), float(w))
        except ValueError as exc:
            raise ValidationError(f"age profile line {line_no}: {exc}") from exc
        grouped.setdefault(scenario, []).append(cell)
    return {
        scenario: _check_profile(scenario, tuple(cells))
        for scenario, cells in grouped.items()
    }


@dataclass(frozen=True)
class ImpactResult:
    """Annual impact of one scenario on one OD pair."""

    od: ODPair
    scenario: str
    deaths_avoided_cycle: float
    deaths_incurred_walk: float
    net_deaths_avoided: float
    health_value: float
    co2_saved_kg: float

    def __post_init__(self) -> None:
        if self.co2_saved_kg < 0:
            raise ValidationError("co2_saved_kg must be non-negative")


def weekly_active_minutes(d_km: float, speed_kmh: float, trips_per_week: float) -> float:
    """Minutes of activity per week for one-way distance d at the given speed."""
    if speed_kmh <= 0:
        raise ValidationError(f"speed must be positive, got {speed_kmh}")
    if d_km < 0 or trips_per_week < 0:
        raise ValidationError("distance and trip count must be non-negative")
    return d_km / speed_kmh * 60.0 * trips_per_week


def deaths_avoided(
    delta_people: float,
    minutes_per_week: float,
    rr: float,
    ref_minutes: float,
    cap: float,
    mortality_rate: float,
    benefit_scale: float = 1.0,
) -> float:
    """Premature deaths avoided per year from delta_people gaining activity."""
    if delta_people < 0:
        raise ValidationError("delta_people must be non-negative")
    if not (0.0 <= mortality_rate <= 1.0):
        raise ValidationError(f"mortality rate {mortality_rate} outside [0, 1]")
    volume = min(minutes_per_week / ref_minutes, cap)
    return delta_people * mortality_rate * (1.0 - rr) * volume * benefit_scale


def walking_displacement_harm(
    displaced_walk: float, d_km: float, params: ImpactParams, mortality_rate: float
) -> float:
    """Deaths per year incurred by walkers who switched to cycling.

    Returned as a positive harm term. Walk trips are assumed to cover the
    same route distance the cycle trip does, at walking speed.
    """
    minutes = weekly_active_minutes(d_km, params.speed_walk, params.commute_trips_per_week)
    return deaths_avoided(
        displaced_walk,
        minutes,
        params.rr_walk,
        params.ref_min_walk,
        params.benefit_cap,
        mortality_rate,
    )


def blended_mortality_rate(
    mortality: MortalityTable, area_id: str, age_profile: Iterable[ProfileCell]
) -> float:
    """Profile-weighted annual mortality rate for one area."""
    return sum(
        cell.weight * mortality.rate(area_id, cell.sex, cell.age_min, cell.age_max)
        for cell in age_profile
    )


def co2_saved(displaced_car: float, route_km: float, params: ImpactParams) -> float:
    """Annual kg CO2e avoided by displaced car commuters."""
    if displaced_car < 0:
        raise ValidationError("displaced_car must be non-negative")
    return (
        displaced_car
        * route_km
        * params.commute_trips_per_week
        * params.weeks_per_year
        * params.co2_kg_per_km
    )


def impact_for_od(
    od: ODPair,
    result: ScenarioResult,
    route_km: float,
    params: ImpactParams,
    mortality: MortalityTable,
    area_id: str,
    godutch_slc: Optional[float] = None,
) -> ImpactResult:
    """Full annual impact of one scenario result over its fast route.

    For the ebikes scenario the increase splits in two: cyclists the
    matching scenario without electric assistance would already have
    (conventional speed, full benefit) and the remainder attributable to
    electric cycles (their own speed, scaled benefit). godutch_slc supplies
    that reference level and is required for ebikes.
    """
    if route_km <= 0:
        raise ValidationError(f"route_km must be positive, got {route_km}")
    rate = blended_mortality_rate(mortality, area_id, params.profile_for(result.scenario))
    delta = max(result.slc - od.cycle, 0.0)

    minutes_cycle = weekly_active_minutes(
        route_km, params.speed_cycle, params.commute_trips_per_week
    )
    if result.scenario == "ebikes":
        if godutch_slc is None:
            raise ValidationError("ebikes impact needs the matching godutch level")
        conventional = max(min(godutch_slc, result.slc) - od.cycle, 0.0)
        conventional = min(conventional, delta)
        ebike_extra = delta - conventional
        minutes_ebike = weekly_active_minutes(
            route_km, params.speed_ebike, params.commute_trips_per_week
        )
        avoided = deaths_avoided(
            conventional, minutes_cycle, params.rr_cycle,
            params.ref_min_cycle, params.benefit_cap, rate,
        ) + deaths_avoided(
            ebike_extra, minutes_ebike, params.rr_cycle,
            params.ref_min_cycle, params.benefit_cap, rate,
            benefit_scale=params.ebike_benefit_scale,
        )
    else:
        avoided = deaths_avoided(
            delta, minutes_cycle, params.rr_cycle,
            params.ref_min_cycle, params.benefit_cap, rate,
        )

    incurred = walking_displacement_harm(result.displaced.walk, route_km, params, rate)
    net = avoided - incurred
    return ImpactResult(
        od=od,
        scenario=result.scenario,
        deaths_avoided_cycle=avoided,
        deaths_incurred_walk=incurred,
        net_deaths_avoided=net,
        health_value=net * params.vsl,
        co2_saved_kg=co2_saved(result.displaced.car, route_km, params),
    )

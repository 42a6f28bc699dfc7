"""Scenario generators for cycling futures, plus mode-shift apportionment.

Each generator returns the scenario level of cycling (slc) for one OD pair:
a fractional expected-cyclist count in [0, od.all]. Values stay as reals
end to end; rounding is a display concern. All functions here are pure, so
an OD set can be processed in any order or in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core_data import ODPair
from .mode_model import ModelCoefficients, linear_predictor, sigmoid

SCENARIOS = ("baseline", "govtarget", "genderequal", "godutch", "ebikes")

PARAM_NAMES = ("gd_main", "gd_dist", "eb_main", "eb_dist", "eb_hill")


class ScenarioUnavailableError(ValueError):
    """The scenario cannot be computed from the data at hand."""


@dataclass(frozen=True)
class ScenarioParams:
    """Logit-scale offsets for the Go Dutch and Ebikes scenarios.

    These are configuration inputs with no meaningful defaults; zero
    offsets make Go Dutch collapse to the baseline model and Ebikes
    collapse to Go Dutch.
    """

    gd_main: float = 0.0
    gd_dist: float = 0.0
    eb_main: float = 0.0
    eb_dist: float = 0.0
    eb_hill: float = 0.0

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"scenario parameter {name} is not finite")

    def to_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioParams":
        unknown = set(data) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown scenario parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioParams":
        """Load from a JSON file with the five named keys; missing keys are 0."""
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")


@dataclass(frozen=True)
class ModeShift:
    """Per-mode decreases caused by new cycling on one OD pair."""

    walk: float = 0.0
    car: float = 0.0
    other: float = 0.0

    @property
    def total(self) -> float:
        return self.walk + self.car + self.other


@dataclass(frozen=True)
class ScenarioResult:
    od: ODPair
    scenario: str
    slc: float
    displaced: ModeShift


def scenario_govtarget(od: ODPair, p_base: float) -> float:
    """Observed cyclists plus the modelled count, capped at the pair total."""
    return min(od.cycle + p_base * od.all, float(od.all))


def scenario_genderequal(od: ODPair) -> float:
    """Lift the female cycling rate to the male rate where it is lower.

    Never reduces cycling: where women already out-cycle men the observed
    female rate is kept. With no male commuters on the pair the female rate
    is left untouched.
    """
    if not od.has_gender:
        raise ScenarioUnavailableError(
            f"OD {od.origin}->{od.dest}: gender split unavailable"
        )
    male_rate = od.male_cycle / od.male_all if od.male_all > 0 else 0.0
    female_rate = od.female_cycle / od.female_all if od.female_all > 0 else 0.0
    if od.male_all > 0:
        female_rate = max(female_rate, male_rate)
    return od.male_cycle + od.female_all * female_rate


def _godutch_logit(
    coeffs: ModelCoefficients, params: ScenarioParams, d_km: float, h_pct: float
) -> float:
    return linear_predictor(coeffs, d_km, h_pct) + params.gd_main + params.gd_dist * d_km


def scenario_godutch(
    coeffs: ModelCoefficients,
    params: ScenarioParams,
    d_km: float,
    h_pct: float,
    od: ODPair,
) -> float:
    """Baseline propensity shifted by the Dutch scaling offsets.

    A pure function of (d, h, od.all): the observed cycling level does not
    enter.
    """
    return sigmoid(_godutch_logit(coeffs, params, d_km, h_pct)) * od.all


def scenario_ebikes(
    coeffs: ModelCoefficients,
    params: ScenarioParams,
    d_km: float,
    h_pct: float,
    od: ODPair,
) -> float:
    """Go Dutch extended by electric-cycle offsets in distance and hilliness."""
    logit = (
        _godutch_logit(coeffs, params, d_km, h_pct)
        + params.eb_main
        + params.eb_dist * d_km
        + params.eb_hill * h_pct
    )
    return sigmoid(logit) * od.all


def apportion_mode_shift(od: ODPair, slc: float) -> ModeShift:
    """Split the cycling increase across the non-cycle modes.

    Every mode is equally likely to be replaced, so each loses in
    proportion to its baseline share of the non-cycling commuters. A
    scenario below the observed cycling level displaces nothing.
    """
    if not (0.0 <= slc <= od.all + 1e-9):
        raise ValueError(
            f"slc {slc} outside [0, {od.all}] for OD {od.origin}->{od.dest}"
        )
    delta = max(slc - od.cycle, 0.0)
    non_cycle = od.all - od.cycle
    if non_cycle <= 0 or delta == 0.0:
        return ModeShift()
    return ModeShift(
        walk=delta * od.walk / non_cycle,
        car=delta * od.car / non_cycle,
        other=delta * od.other / non_cycle,
    )


def scenario_result(
    od: ODPair,
    scenario: str,
    coeffs: Optional[ModelCoefficients] = None,
    params: Optional[ScenarioParams] = None,
    d_km: Optional[float] = None,
    h_pct: Optional[float] = None,
) -> ScenarioResult:
    """Evaluate one scenario for one OD pair, including its mode shift."""
    if scenario == "baseline":
        slc = float(od.cycle)
    elif scenario == "genderequal":
        slc = scenario_genderequal(od)
    else:
        if coeffs is None or d_km is None or h_pct is None:
            raise ValueError(f"scenario {scenario!r} needs model inputs")
        if scenario == "govtarget":
            slc = scenario_govtarget(od, sigmoid(linear_predictor(coeffs, d_km, h_pct)))
        elif scenario == "godutch":
            slc = scenario_godutch(coeffs, params or ScenarioParams(), d_km, h_pct, od)
        elif scenario == "ebikes":
            slc = scenario_ebikes(coeffs, params or ScenarioParams(), d_km, h_pct, od)
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
    return ScenarioResult(od=od, scenario=scenario, slc=slc, displaced=apportion_mode_shift(od, slc))

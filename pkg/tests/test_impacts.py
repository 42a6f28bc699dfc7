import pytest

from cycleplan.core_data import MortalityRow, MortalityTable, ODPair, ValidationError
from cycleplan.impacts import (
    ImpactParams,
    ImpactResult,
    ProfileCell,
    blended_mortality_rate,
    co2_saved,
    deaths_avoided,
    impact_for_od,
    parse_age_profiles,
    walking_displacement_harm,
    weekly_active_minutes,
)
from cycleplan.scenarios import ModeShift, ScenarioResult

PROFILE_CSV = """scenario,sex,age_min,age_max,weight
govtarget,male,20,44,0.4
govtarget,male,45,64,0.2
govtarget,female,20,44,0.25
govtarget,female,45,64,0.15
ebikes,male,20,44,0.5
ebikes,female,20,44,0.5
"""

MORTALITY = MortalityTable(
    [
        MortalityRow("A", "male", 20, 44, 0.001),
        MortalityRow("A", "male", 45, 64, 0.004),
        MortalityRow("A", "female", 20, 44, 0.0008),
        MortalityRow("A", "female", 45, 64, 0.003),
    ]
)


def make_params(**overrides):
    values = dict(
        speed_cycle=14.0,
        speed_walk=5.3,
        speed_ebike=15.5,
        rr_cycle=0.9,
        rr_walk=0.89,
        ref_min_cycle=100.0,
        ref_min_walk=168.0,
        benefit_cap=2.0,
        vsl=1_900_000.0,
        commute_trips_per_week=10.0,
        weeks_per_year=45.6,
        ebike_benefit_scale=0.9,
        co2_kg_per_km=0.186,
        cyclist_age_profile=parse_age_profiles(PROFILE_CSV),
    )
    values.update(overrides)
    return ImpactParams(**values)


class TestProfiles:
    def test_parse_groups_by_scenario(self):
        profiles = parse_age_profiles(PROFILE_CSV)
        assert set(profiles) == {"govtarget", "ebikes"}
        assert len(profiles["govtarget"]) == 4

    def test_weights_must_sum_to_one(self):
        bad = "scenario,sex,age_min,age_max,weight\ngovtarget,male,20,44,0.7\n"
        with pytest.raises(ValidationError, match="sums to"):
            parse_age_profiles(bad)

    def test_header_is_strict(self):
        with pytest.raises(ValidationError, match="header"):
            parse_age_profiles("scenario,sex,min,max,w\n")

    def test_sex_values_checked(self):
        with pytest.raises(ValidationError, match="sex"):
            ProfileCell("other", 20, 44, 1.0)


class TestParams:
    def test_file_round_trip(self, tmp_path):
        import json

        scalars = {
            k: getattr(make_params(), k)
            for k in (
                "speed_cycle", "speed_walk", "speed_ebike", "rr_cycle", "rr_walk",
                "ref_min_cycle", "ref_min_walk", "benefit_cap", "ebike_benefit_scale",
                "vsl", "commute_trips_per_week", "weeks_per_year", "co2_kg_per_km",
            )
        }
        (tmp_path / "params.json").write_text(json.dumps(scalars))
        (tmp_path / "profiles.csv").write_text(PROFILE_CSV)
        params = ImpactParams.from_file(tmp_path / "params.json", tmp_path / "profiles.csv")
        assert params == make_params()

    def test_unknown_scalar_rejected(self, tmp_path):
        (tmp_path / "params.json").write_text('{"speed_cycle": 14, "inflation": 2}')
        with pytest.raises(ValidationError, match="unknown"):
            ImpactParams.from_file(tmp_path / "params.json")

    def test_relative_risk_bounds(self):
        with pytest.raises(ValidationError, match="rr_cycle"):
            make_params(rr_cycle=1.0)

    def test_ebike_scale_bounds(self):
        with pytest.raises(ValidationError, match="ebike_benefit_scale"):
            make_params(ebike_benefit_scale=0.0)

    def test_missing_profile_named_in_error(self):
        with pytest.raises(ValidationError, match="godutch"):
            make_params().profile_for("godutch")


class TestPieces:
    def test_weekly_minutes(self):
        # 7 km at 14 km/h is 30 min each way; 10 trips is 300 min/week.
        assert weekly_active_minutes(7.0, 14.0, 10.0) == 300.0

    def test_deaths_avoided_formula(self):
        # volume below cap: 50/100 = 0.5
        out = deaths_avoided(12.0, 50.0, 0.9, 100.0, 2.0, 0.002)
        assert out == 12.0 * 0.002 * (1.0 - 0.9) * 0.5

    def test_deaths_avoided_cap_binds(self):
        capped = deaths_avoided(1.0, 1000.0, 0.9, 100.0, 2.0, 0.002)
        assert capped == 1.0 * 0.002 * (1.0 - 0.9) * 2.0

    def test_benefit_scale_multiplies(self):
        full = deaths_avoided(1.0, 50.0, 0.9, 100.0, 2.0, 0.002)
        assert deaths_avoided(1.0, 50.0, 0.9, 100.0, 2.0, 0.002, benefit_scale=0.9) == full * 0.9

    def test_blended_rate_is_weighted_sum(self):
        profile = parse_age_profiles(PROFILE_CSV)["govtarget"]
        expected = 0.4 * 0.001 + 0.2 * 0.004 + 0.25 * 0.0008 + 0.15 * 0.003
        assert blended_mortality_rate(MORTALITY, "A", profile) == pytest.approx(
            expected, rel=1e-15
        )

    def test_blended_rate_requires_exact_bands(self):
        profile = (ProfileCell("male", 20, 64, 1.0),)
        with pytest.raises(ValidationError, match="no mortality rate"):
            blended_mortality_rate(MORTALITY, "A", profile)

    def test_co2_formula(self):
        params = make_params()
        out = co2_saved(3.5, 4.0, params)
        assert out == 3.5 * 4.0 * 10.0 * 45.6 * 0.186

    def test_walking_harm_uses_walk_speed(self):
        params = make_params()
        minutes = weekly_active_minutes(4.0, params.speed_walk, 10.0)
        expected = deaths_avoided(2.0, minutes, 0.89, 168.0, 2.0, 0.002)
        assert walking_displacement_harm(2.0, 4.0, params, 0.002) == expected


def od_result(scenario, slc, walk_shift, car_shift):
    od = ODPair("A", "B", 100, 10, 30, 50, 10)
    return od, ScenarioResult(
        od=od, scenario=scenario, slc=slc,
        displaced=ModeShift(walk=walk_shift, car=car_shift, other=0.0),
    )


class TestImpactForOD:
    def test_matches_hand_computation(self):
        params = make_params()
        od, result = od_result("govtarget", 22.0, walk_shift=4.0, car_shift=6.7)
        rate = blended_mortality_rate(MORTALITY, "A", params.profile_for("govtarget"))
        route_km = 5.2

        minutes = 5.2 / 14.0 * 60.0 * 10.0
        avoided = 12.0 * rate * 0.1 * min(minutes / 100.0, 2.0)
        walk_minutes = 5.2 / 5.3 * 60.0 * 10.0
        incurred = 4.0 * rate * 0.11 * min(walk_minutes / 168.0, 2.0)

        out = impact_for_od(od, result, route_km, params, MORTALITY, "A")
        assert out.deaths_avoided_cycle == pytest.approx(avoided, rel=1e-12)
        assert out.deaths_incurred_walk == pytest.approx(incurred, rel=1e-12)
        assert out.net_deaths_avoided == pytest.approx(avoided - incurred, rel=1e-12)
        assert out.health_value == out.net_deaths_avoided * params.vsl
        assert out.co2_saved_kg == pytest.approx(
            6.7 * 5.2 * 10.0 * 45.6 * 0.186, rel=1e-15
        )

    def test_no_change_means_zero_impact(self):
        params = make_params()
        od, result = od_result("govtarget", 10.0, 0.0, 0.0)
        out = impact_for_od(od, result, 3.0, params, MORTALITY, "A")
        assert out.net_deaths_avoided == 0.0
        assert out.health_value == 0.0
        assert out.co2_saved_kg == 0.0

    def test_ebikes_requires_reference_level(self):
        params = make_params()
        od, result = od_result("ebikes", 30.0, 0.0, 0.0)
        with pytest.raises(ValidationError, match="godutch"):
            impact_for_od(od, result, 3.0, params, MORTALITY, "A")

    def test_ebikes_splits_against_reference(self):
        params = make_params()
        od, result = od_result("ebikes", 30.0, 0.0, 0.0)
        rate = blended_mortality_rate(MORTALITY, "A", params.profile_for("ebikes"))
        route_km = 4.0
        m_cycle = weekly_active_minutes(route_km, params.speed_cycle, 10.0)
        m_ebike = weekly_active_minutes(route_km, params.speed_ebike, 10.0)

        # Reference (non-assisted) level 24: 14 conventional + 6 electric.
        out = impact_for_od(od, result, route_km, params, MORTALITY, "A", godutch_slc=24.0)
        expected = deaths_avoided(14.0, m_cycle, 0.9, 100.0, 2.0, rate) + deaths_avoided(
            6.0, m_ebike, 0.9, 100.0, 2.0, rate, benefit_scale=0.9
        )
        assert out.deaths_avoided_cycle == pytest.approx(expected, rel=1e-12)

    def test_ebikes_reference_above_level_means_all_conventional(self):
        params = make_params()
        od, result = od_result("ebikes", 30.0, 0.0, 0.0)
        out = impact_for_od(od, result, 4.0, params, MORTALITY, "A", godutch_slc=35.0)
        rate = blended_mortality_rate(MORTALITY, "A", params.profile_for("ebikes"))
        m_cycle = weekly_active_minutes(4.0, params.speed_cycle, 10.0)
        assert out.deaths_avoided_cycle == pytest.approx(
            deaths_avoided(20.0, m_cycle, 0.9, 100.0, 2.0, rate), rel=1e-12
        )

    def test_ebikes_reference_below_baseline_means_all_electric(self):
        params = make_params()
        od, result = od_result("ebikes", 30.0, 0.0, 0.0)
        out = impact_for_od(od, result, 4.0, params, MORTALITY, "A", godutch_slc=5.0)
        rate = blended_mortality_rate(MORTALITY, "A", params.profile_for("ebikes"))
        m_ebike = weekly_active_minutes(4.0, params.speed_ebike, 10.0)
        assert out.deaths_avoided_cycle == pytest.approx(
            deaths_avoided(20.0, m_ebike, 0.9, 100.0, 2.0, rate, benefit_scale=0.9),
            rel=1e-12,
        )

    def test_route_length_must_be_positive(self):
        params = make_params()
        od, result = od_result("govtarget", 22.0, 0.0, 0.0)
        with pytest.raises(ValidationError, match="route_km"):
            impact_for_od(od, result, 0.0, params, MORTALITY, "A")

    def test_negative_co2_rejected(self):
        od = ODPair("A", "B", 10, 1, 3, 5, 1)
        with pytest.raises(ValidationError):
            ImpactResult(od, "govtarget", 0.0, 0.0, 0.0, 0.0, -1.0)

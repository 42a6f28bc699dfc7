import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cycleplan.mode_model import (
    COEFFICIENT_NAMES,
    FitError,
    ModelCoefficients,
    TrainingObservation,
    decay_curve,
    design_row,
    fit_logistic,
    linear_predictor,
    log_likelihood,
    log_likelihood_gradient,
    observations_from_ods,
    predict_pcycle,
    sigmoid,
)

COEFFS = ModelCoefficients(
    alpha=-0.8, beta_d=-0.35, beta_sqrt_d=0.6, beta_d2=0.0045,
    gamma_h=-0.25, gamma_dh=0.011, gamma_sqrtdh=-0.09,
)


class TestDesignRow:
    def test_feature_order(self):
        d, h = 4.0, 3.0
        assert design_row(d, h) == (1.0, 4.0, 2.0, 16.0, 3.0, 12.0, 6.0)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            design_row(0.0, 1.0)

    def test_rejects_negative_hilliness(self):
        with pytest.raises(ValueError):
            design_row(1.0, -0.1)

    def test_linear_predictor_is_dot_product(self):
        row = np.array(design_row(3.7, 1.2))
        expected = float(row @ COEFFS.as_array())
        assert linear_predictor(COEFFS, 3.7, 1.2) == pytest.approx(expected, rel=1e-15)


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(0.0) == 0.5

    def test_extreme_arguments_stay_open_interval(self):
        assert 0.0 < sigmoid(-800.0) < sigmoid(800.0) < 1.0

    @given(st.floats(-50, 50))
    def test_complement_symmetry(self, eta):
        assert sigmoid(eta) + sigmoid(-eta) == pytest.approx(1.0, abs=1e-12)

    def test_predict_composes(self):
        eta = linear_predictor(COEFFS, 5.0, 2.0)
        assert predict_pcycle(COEFFS, 5.0, 2.0) == sigmoid(eta)


class TestCoefficients:
    def test_dict_round_trip(self):
        assert ModelCoefficients.from_dict(COEFFS.to_dict()) == COEFFS

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "coeffs.json"
        COEFFS.to_file(path)
        assert ModelCoefficients.from_file(path) == COEFFS

    def test_missing_keys_default_to_zero(self):
        c = ModelCoefficients.from_dict({"alpha": 1.5})
        assert c.alpha == 1.5 and c.beta_d == 0.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            ModelCoefficients.from_dict({"slope": 1.0})

    def test_array_round_trip(self):
        assert ModelCoefficients.from_array(COEFFS.as_array()) == COEFFS
        with pytest.raises(ValueError):
            ModelCoefficients.from_array([1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            ModelCoefficients(alpha=math.nan)


def simulate(rng, coeffs, ds, hs, n_per_cell):
    obs = []
    for d in ds:
        for h in hs:
            p = predict_pcycle(coeffs, d, h)
            obs.append(TrainingObservation(d, h, n_per_cell, int(rng.binomial(n_per_cell, p))))
    return obs


class TestGradient:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        obs = simulate(rng, COEFFS, [0.5, 2.0, 5.0, 9.0], [0.0, 2.0], 50)
        beta = rng.normal(0.0, 0.3, size=len(COEFFICIENT_NAMES))
        grad = log_likelihood_gradient(beta, obs)
        eps = 1e-6
        for k in range(len(beta)):
            step = np.zeros_like(beta)
            step[k] = eps
            fd = (log_likelihood(beta + step, obs) - log_likelihood(beta - step, obs)) / (2 * eps)
            scale = max(1.0, abs(fd))
            assert abs(grad[k] - fd) / scale < 1e-4


class TestFit:
    def test_recovers_generating_model(self):
        rng = np.random.default_rng(11)
        ds = [0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 14.0, 18.0, 22.0, 27.0]
        hs = [0.0, 1.0, 2.0, 4.0]
        obs = simulate(rng, COEFFS, ds, hs, 5000)
        fitted = fit_logistic(obs)
        for name in COEFFICIENT_NAMES:
            assert getattr(fitted, name) == pytest.approx(getattr(COEFFS, name), abs=0.05)

    def test_calibration_at_optimum(self):
        # Score includes the intercept column, so fitted totals match observed.
        rng = np.random.default_rng(3)
        obs = simulate(rng, COEFFS, [0.5, 1.5, 3.0, 6.0, 10.0], [0.0, 3.0], 400)
        fitted = fit_logistic(obs)
        expected = sum(o.n_all * predict_pcycle(fitted, o.d_km, o.h_pct) for o in obs)
        observed = sum(o.n_cycle for o in obs)
        assert expected == pytest.approx(observed, rel=1e-6)

    def test_needs_two_observations(self):
        with pytest.raises(FitError, match="at least 2"):
            fit_logistic([TrainingObservation(1.0, 0.0, 10, 2)])

    def test_needs_distance_variation(self):
        obs = [TrainingObservation(2.0, 0.0, 10, 2), TrainingObservation(2.0, 1.0, 10, 3)]
        with pytest.raises(FitError, match="variation in distance"):
            fit_logistic(obs)

    def test_underdetermined_system_is_singular(self):
        obs = [TrainingObservation(1.0, 0.0, 40, 10), TrainingObservation(2.0, 0.0, 40, 8)]
        with pytest.raises(FitError, match="singular"):
            fit_logistic(obs)

    def test_perfect_separation_detected(self):
        # Everyone cycles below 5 km, nobody at or above: the MLE diverges.
        obs = []
        for d in (0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0):
            for h in (0.0, 1.0, 2.0):
                n = 200
                obs.append(TrainingObservation(d, h, n, n if d < 5.0 else 0))
        with pytest.raises(FitError, match="separation"):
            fit_logistic(obs)


class TestObservationBuilding:
    def test_skips_empty_and_distant_groups(self):
        records = [
            (1.0, 0.0, 20, 3),
            (30.0, 0.0, 50, 1),   # at the cutoff: excluded
            (29.99, 0.0, 50, 1),  # just inside
            (5.0, 1.0, 0, 0),     # empty group
        ]
        obs = observations_from_ods(records)
        assert [(o.d_km, o.n_all) for o in obs] == [(1.0, 20), (29.99, 50)]

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            TrainingObservation(1.0, 0.0, 5, 9)


class TestDecayCurve:
    def test_values_match_predict(self):
        grid = [0.5, 1.0, 2.0, 4.0]
        curve = decay_curve(COEFFS, 1.0, grid)
        assert [d for d, _ in curve] == grid
        for d, p in curve:
            assert p == predict_pcycle(COEFFS, d, 1.0)

    def test_grid_must_ascend(self):
        with pytest.raises(ValueError):
            decay_curve(COEFFS, 0.0, [1.0, 1.0])

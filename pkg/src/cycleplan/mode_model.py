"""Baseline cycling-uptake model: logistic in route distance and hilliness.

The linear predictor uses seven terms: an intercept, distance, sqrt and
squared distance (distance decay has a short-range rise and a long tail),
hilliness, and distance x hilliness interactions. Any subset can be disabled
by zeroing its coefficient. Fitting is grouped-binomial maximum likelihood
via iteratively reweighted least squares, which is identical to the
row-per-commuter likelihood but far cheaper.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

COEFFICIENT_NAMES = (
    "alpha",
    "beta_d",
    "beta_sqrt_d",
    "beta_d2",
    "gamma_h",
    "gamma_dh",
    "gamma_sqrtdh",
)

MAX_FIT_DISTANCE_KM = 30.0  # trips at or beyond this are excluded from fitting

_P_FLOOR = 5e-324  # smallest positive subnormal; keeps predictions in (0, 1)
_P_CEIL = math.nextafter(1.0, 0.0)


class FitError(RuntimeError):
    """Model fitting failed; the message names the condition."""


@dataclass(frozen=True)
class ModelCoefficients:
    """Logit-scale coefficients, ordered as COEFFICIENT_NAMES."""

    alpha: float = 0.0
    beta_d: float = 0.0
    beta_sqrt_d: float = 0.0
    beta_d2: float = 0.0
    gamma_h: float = 0.0
    gamma_dh: float = 0.0
    gamma_sqrtdh: float = 0.0

    def __post_init__(self) -> None:
        for name in COEFFICIENT_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} is not finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in COEFFICIENT_NAMES])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ModelCoefficients":
        if len(values) != len(COEFFICIENT_NAMES):
            raise ValueError(f"expected {len(COEFFICIENT_NAMES)} coefficients")
        return cls(**{name: float(v) for name, v in zip(COEFFICIENT_NAMES, values)})

    def to_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in COEFFICIENT_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelCoefficients":
        unknown = set(data) - set(COEFFICIENT_NAMES)
        if unknown:
            raise ValueError(f"unknown coefficient keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_file(cls, path: str | Path) -> "ModelCoefficients":
        """Load from a JSON file with the seven named keys; missing keys are 0."""
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")


@dataclass(frozen=True)
class TrainingObservation:
    """One grouped-binomial observation: n_cycle cyclists out of n_all commuters."""

    d_km: float
    h_pct: float
    n_all: int
    n_cycle: int

    def __post_init__(self) -> None:
        if self.d_km <= 0:
            raise ValueError(f"d_km must be positive, got {self.d_km}")
        if self.h_pct < 0:
            raise ValueError(f"h_pct must be non-negative, got {self.h_pct}")
        if not (0 <= self.n_cycle <= self.n_all):
            raise ValueError(
                f"need 0 <= n_cycle <= n_all, got {self.n_cycle}/{self.n_all}"
            )


def design_row(d_km: float, h_pct: float) -> tuple[float, ...]:
    """Feature vector (1, d, sqrt(d), d^2, h, d*h, sqrt(d)*h)."""
    if d_km <= 0:
        raise ValueError(f"d_km must be positive, got {d_km}")
    if h_pct < 0:
        raise ValueError(f"h_pct must be non-negative, got {h_pct}")
    sqrt_d = math.sqrt(d_km)
    return (1.0, d_km, sqrt_d, d_km * d_km, h_pct, d_km * h_pct, sqrt_d * h_pct)


def linear_predictor(coeffs: ModelCoefficients, d_km: float, h_pct: float) -> float:
    """Logit-scale value of the model at (d, h)."""
    row = design_row(d_km, h_pct)
    return (
        coeffs.alpha * row[0]
        + coeffs.beta_d * row[1]
        + coeffs.beta_sqrt_d * row[2]
        + coeffs.beta_d2 * row[3]
        + coeffs.gamma_h * row[4]
        + coeffs.gamma_dh * row[5]
        + coeffs.gamma_sqrtdh * row[6]
    )


def sigmoid(eta: float) -> float:
    """Numerically stable logistic function, clamped to the open interval (0, 1)."""
    if eta >= 0:
        p = 1.0 / (1.0 + math.exp(-eta))
    else:
        z = math.exp(eta)
        p = z / (1.0 + z)
    return min(max(p, _P_FLOOR), _P_CEIL)


def predict_pcycle(coeffs: ModelCoefficients, d_km: float, h_pct: float) -> float:
    """Probability that a commute of distance d_km and hilliness h_pct is cycled."""
    return sigmoid(linear_predictor(coeffs, d_km, h_pct))


def _design_matrix(observations: Sequence[TrainingObservation]) -> np.ndarray:
    return np.array([design_row(o.d_km, o.h_pct) for o in observations])


def log_likelihood(beta: np.ndarray, observations: Sequence[TrainingObservation]) -> float:
    """Grouped-binomial log likelihood (binomial coefficient terms dropped)."""
    X = _design_matrix(observations)
    n = np.array([o.n_all for o in observations], dtype=float)
    y = np.array([o.n_cycle for o in observations], dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    # log(p) = -log1p(exp(-eta)) and log(1-p) = -eta - log1p(exp(-eta))
    log_p = -np.logaddexp(0.0, -eta)
    log_q = -np.logaddexp(0.0, eta)
    return float(y @ log_p + (n - y) @ log_q)


def log_likelihood_gradient(
    beta: np.ndarray, observations: Sequence[TrainingObservation]
) -> np.ndarray:
    """Score vector: X^T (y - n p)."""
    X = _design_matrix(observations)
    n = np.array([o.n_all for o in observations], dtype=float)
    y = np.array([o.n_cycle for o in observations], dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    p = 1.0 / (1.0 + np.exp(-eta))
    return X.T @ (y - n * p)


def fit_logistic(
    observations: Iterable[TrainingObservation],
    max_iter: int = 100,
    tol: float = 1e-8,
) -> ModelCoefficients:
    """Maximum-likelihood fit by iteratively reweighted least squares.

    Converges when the largest absolute coefficient change drops below
    `tol`. Deterministic for a given observation order. Raises FitError on
    a singular system, on suspected perfect separation (the linear
    predictor diverging past +-100 at a data point), or on non-convergence.
    """
    obs = list(observations)
    if len(obs) < 2:
        raise FitError(f"need at least 2 observations, got {len(obs)}")
    if len({o.d_km for o in obs}) < 2:
        raise FitError("no variation in distance across observations")
    n = np.array([o.n_all for o in obs], dtype=float)
    if n.sum() <= 0:
        raise FitError("total trials must be positive")
    y = np.array([o.n_cycle for o in obs], dtype=float)
    X = _design_matrix(obs)
    beta = np.zeros(X.shape[1])
    for iteration in range(1, max_iter + 1):
        eta = X @ beta
        if np.max(np.abs(eta)) > 100.0:
            raise FitError(
                "perfect separation suspected: linear predictor diverged "
                f"beyond +-100 at iteration {iteration}"
            )
        p = 1.0 / (1.0 + np.exp(-eta))
        w = n * p * (1.0 - p)
        hessian = X.T @ (X * w[:, None])
        score = X.T @ (y - n * p)
        try:
            delta = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            raise FitError(
                "singular system: the weighted design matrix is not invertible "
                "(collinear features or zero weights)"
            ) from None
        if not np.all(np.isfinite(delta)):
            raise FitError("singular system: non-finite IRLS step")
        beta = beta + delta
        if np.max(np.abs(delta)) < tol:
            return ModelCoefficients.from_array(beta)
    raise FitError(f"did not converge after {max_iter} iterations")


def observations_from_ods(
    records: Iterable[tuple[float, float, int, int]],
    max_d_km: float = MAX_FIT_DISTANCE_KM,
) -> list[TrainingObservation]:
    """Training observations from (d_km, h_pct, all, cycle) tuples.

    Trips at or beyond max_d_km are excluded, as are empty groups.
    """
    out = []
    for d_km, h_pct, n_all, n_cycle in records:
        if n_all <= 0 or d_km >= max_d_km:
            continue
        out.append(TrainingObservation(d_km, h_pct, n_all, n_cycle))
    return out


def decay_curve(
    coeffs: ModelCoefficients, h_pct: float, d_grid: Sequence[float]
) -> list[tuple[float, float]]:
    """Tabulate (d, p) along a distance grid at fixed hilliness, for diagnostics."""
    if not d_grid:
        raise ValueError("empty distance grid")
    prev = 0.0
    for d in d_grid:
        if d <= prev:
            raise ValueError("distance grid must be positive and strictly ascending")
        prev = d
    return [(float(d), predict_pcycle(coeffs, d, h_pct)) for d in d_grid]

"""Stealth attack construction: objective, single-sensor optimum and greedy k-sparse plans.

Sensor indices are 0-based positions in the measurement vector.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import linalg

from .errors import DegenerateAttackError, DomainError
from .gaussian import StateModel, check_psd, cholesky_lower, logdet_spd
from .grid import MeasurementModel

__all__ = [
    "AttackPlan",
    "SingleSensorSolution",
    "stealth_objective",
    "unconstrained_optimum",
    "optimal_variance",
    "single_sensor_cost",
    "single_sensor_attack",
    "greedy_k_sparse",
    "assemble_cov",
]

# w * sigma^2 this close to 1 means the sensor carries no state information
DEGENERATE_TOL = 1e-12


def _require_strict_lambda(lam):
    if not lam > 1:
        raise DomainError(f"lambda must exceed 1, got {lam}")


@dataclasses.dataclass(frozen=True)
class SingleSensorSolution:
    alpha: int
    w_min: float
    variance: float


@dataclasses.dataclass(frozen=True)
class AttackPlan:
    """Ordered sensor selection with one independent Gaussian variance per sensor."""

    support: tuple[int, ...]
    variances: tuple[float, ...]
    w_mins: tuple[float, ...]
    lam: float
    m: int

    def __post_init__(self):
        if not (len(self.support) == len(self.variances) == len(self.w_mins)):
            raise DomainError("support, variances and w_mins must have equal length")
        if len(set(self.support)) != len(self.support):
            raise DomainError("support indices must be distinct")

    @property
    def k(self) -> int:
        return len(self.support)

    @property
    def sigma_aa(self) -> np.ndarray:
        return assemble_cov(self, self.m)

    def prefix(self, k: int) -> AttackPlan:
        """Plan made of the first ``k`` greedy selections."""
        return dataclasses.replace(
            self,
            support=self.support[:k],
            variances=self.variances[:k],
            w_mins=self.w_mins[:k],
        )


def assemble_cov(plan: AttackPlan, m: int) -> np.ndarray:
    cov = np.zeros((m, m))
    for idx, var in zip(plan.support, plan.variances):
        if not 0 <= idx < m:
            raise DomainError(f"sensor index {idx} outside [0, {m})")
        cov[idx, idx] = var
    return cov


def stealth_objective(state: StateModel, sigma_aa, lam: float) -> float:
    """``(1-lam) log|I + W S| - log|sigma^2 I + S| + lam tr(W S)`` for attack covariance ``S``.

    Equals ``2 (I(X;Y_A) + lam D(P_{Y_A}||P_Y)) - log|Sigma_YY|``.
    """
    if not lam >= 1:
        raise DomainError(f"lambda must be at least 1, got {lam}")
    S = check_psd(sigma_aa, state.m)
    logdet_gain = logdet_spd(state.sigma_yy + S) - state.logdet_yy
    logdet_noise = logdet_spd(state.noise_variance * np.eye(state.m) + S)
    return (1.0 - lam) * logdet_gain - logdet_noise + lam * float(np.sum(state.w * S))


def unconstrained_optimum(state: StateModel, lam: float) -> np.ndarray:
    """Dense attack covariance ``H Sigma_XX H^T / lam`` (all sensors compromised)."""
    if not lam >= 1:
        raise DomainError(f"lambda must be at least 1, got {lam}")
    return state.signal_cov / lam


def optimal_variance(w: float, noise_variance: float, lam: float) -> float:
    """Minimizer over ``r >= 0`` of :func:`single_sensor_cost` for precision diagonal ``w``."""
    s2 = noise_variance
    radicand = s2 * s2 - 4.0 * (w * s2 - 1.0) / (lam * w * w)
    return max(-0.5 * s2 + 0.5 * math.sqrt(radicand), 0.0)


def single_sensor_cost(r, w: float, noise_variance: float, lam: float):
    """Objective restricted to attack variance ``r`` on one sensor with ``W_ii = w``."""
    r = np.asarray(r, dtype=float)
    return (
        (1.0 - lam) * np.log1p(w * r)
        - np.log(noise_variance + r)
        + lam * w * r
    )


def _select(w_diag: np.ndarray, noise_variance: float, lam: float):
    pos = int(np.argmin(w_diag))  # first occurrence: lowest index wins ties
    w_min = float(w_diag[pos])
    if w_min * noise_variance >= 1.0 - DEGENERATE_TOL:
        return pos, w_min, None
    return pos, w_min, optimal_variance(w_min, noise_variance, lam)


def single_sensor_attack(state: StateModel, lam: float) -> SingleSensorSolution:
    """Best attack confined to one sensor: smallest ``W_ii`` with its closed-form variance."""
    _require_strict_lambda(lam)
    pos, w_min, var = _select(np.diag(state.w), state.noise_variance, lam)
    if var is None:
        raise DegenerateAttackError(
            f"sensor {pos} has w*sigma^2 = {w_min * state.noise_variance:.15g}; "
            "its optimal attack variance is zero"
        )
    return SingleSensorSolution(alpha=pos, w_min=w_min, variance=var)


def greedy_k_sparse(meas: MeasurementModel, sigma_xx, lam: float, k: int) -> AttackPlan:
    """Greedy ``k``-sparse attack.

    Each round drops the already attacked rows from ``H``, rebuilds the
    precision matrix of the remaining observations and attacks the row with
    the smallest precision diagonal, using the single-sensor variance.

    A round whose best sensor is uninformative raises
    :class:`DegenerateAttackError`; its ``partial`` attribute carries the plan
    built so far.
    """
    _require_strict_lambda(lam)
    H = meas.jacobian
    m = H.shape[0]
    if not 1 <= k <= m:
        raise DomainError(f"k must lie in [1, {m}], got {k}")
    sigma_xx = check_psd(sigma_xx, H.shape[1], "sigma_xx")
    s2 = meas.noise_variance

    remaining = list(range(m))
    support, variances, w_mins = [], [], []
    for rnd in range(1, k + 1):
        Hj = H[remaining]
        cov = Hj @ sigma_xx @ Hj.T + s2 * np.eye(len(remaining))
        chol = cholesky_lower(0.5 * (cov + cov.T))
        Wj = linalg.cho_solve((chol, True), np.eye(len(remaining)))
        pos, w_min, var = _select(np.diag(Wj), s2, lam)
        original = remaining[pos]
        if var is None:
            partial = AttackPlan(tuple(support), tuple(variances), tuple(w_mins), lam, m)
            raise DegenerateAttackError(
                f"round {rnd}: sensor {original} has w*sigma^2 = {w_min * s2:.15g}",
                round=rnd,
                partial=partial,
            )
        support.append(original)
        variances.append(var)
        w_mins.append(w_min)
        del remaining[pos]
    return AttackPlan(tuple(support), tuple(variances), tuple(w_mins), lam, m)

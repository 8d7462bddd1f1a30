"""Likelihood ratio test between attacked and nominal observations, with Monte Carlo error rates."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.linalg import solve_triangular

from . import _backend
from .errors import DomainError
from .gaussian import StateModel, attacked_cov, cholesky_lower
from .rng import SampleStream

__all__ = [
    "LrtModel",
    "DetectionEstimate",
    "lrt_model",
    "log_likelihood_ratio",
    "exceedance_counts",
    "estimate_probabilities",
    "DEFAULT_TRIALS",
]

DEFAULT_TRIALS = 20_000


@dataclasses.dataclass(frozen=True, eq=False)
class LrtModel:
    chol_yy: np.ndarray
    chol_yaya: np.ndarray
    log_det_yy: float
    log_det_yaya: float
    log_tau: float = 0.0

    @property
    def m(self) -> int:
        return self.chol_yy.shape[0]

    @property
    def offset(self) -> float:
        """Constant part of the log ratio, ``(log|S_Y| - log|S_YA|) / 2``."""
        return 0.5 * (self.log_det_yy - self.log_det_yaya)


@dataclasses.dataclass(frozen=True)
class DetectionEstimate:
    p_detection: float
    p_false_alarm: float
    trials: int
    seed: int
    detections: int = 0
    false_alarms: int = 0


def _logdet_from_chol(L) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def lrt_model(state: StateModel, sigma_aa, tau: float = 1.0) -> LrtModel:
    if not tau > 0:
        raise DomainError(f"threshold tau must be positive, got {tau}")
    chol_a = cholesky_lower(attacked_cov(state, sigma_aa))
    return LrtModel(
        chol_yy=state.chol_yy,
        chol_yaya=chol_a,
        log_det_yy=_logdet_from_chol(state.chol_yy),
        log_det_yaya=_logdet_from_chol(chol_a),
        log_tau=math.log(tau),
    )


def log_likelihood_ratio(model: LrtModel, y) -> float:
    """``log f_{Y_A}(y) - log f_Y(y)``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.m,):
        raise DomainError(f"observation must have length {model.m}, got shape {y.shape}")
    u = solve_triangular(model.chol_yy, y, lower=True)
    v = solve_triangular(model.chol_yaya, y, lower=True)
    return 0.5 * (float(u @ u) - float(v @ v)) + model.offset


def exceedance_counts(
    state: StateModel,
    sigma_aa,
    taus,
    trials: int,
    stream: SampleStream,
    n_threads: int = 1,
    backend: str | None = None,
):
    """Count draws with ``L(y) >= tau`` for every threshold in ``taus``.

    Returns ``(attacked_counts, nominal_counts)`` as integer arrays aligned
    with ``taus``. Each trial's standard normal vector feeds both hypotheses,
    so the counts for different thresholds share one sample.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(~(taus > 0)):
        raise DomainError("every threshold must be positive")
    if trials < 1:
        raise DomainError("trials must be at least 1")
    model = lrt_model(state, sigma_aa)
    kernels = _backend.get(backend)
    h0, h1 = kernels.half_quadratic_gap(
        stream.key, stream.trial_counter, trials, model.chol_yy, model.chol_yaya, n_threads
    )
    log_taus = np.log(taus)
    attacked = np.count_nonzero(h1[:, None] + model.offset >= log_taus[None, :], axis=0)
    nominal = np.count_nonzero(h0[:, None] + model.offset >= log_taus[None, :], axis=0)
    return attacked, nominal


def estimate_probabilities(
    state: StateModel,
    sigma_aa,
    tau: float,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    *,
    path: tuple[int, ...] = (),
    n_threads: int = 1,
    backend: str | None = None,
) -> DetectionEstimate:
    """Monte Carlo probability of detection and false alarm of the LRT at threshold ``tau``."""
    if not tau > 0:
        raise DomainError(f"threshold tau must be positive, got {tau}")
    attacked, nominal = exceedance_counts(
        state, sigma_aa, [tau], trials, SampleStream(seed, 0, tuple(path)), n_threads, backend
    )
    d, f = int(attacked[0]), int(nominal[0])
    return DetectionEstimate(
        p_detection=d / trials,
        p_false_alarm=f / trials,
        trials=trials,
        seed=seed,
        detections=d,
        false_alarms=f,
    )

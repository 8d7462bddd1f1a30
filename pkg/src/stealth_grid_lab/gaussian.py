"""Gaussian model of states and observations, plus closed-form information measures.

All information quantities are in nats.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import linalg

from .errors import DomainError, NumericalError
from .grid import MeasurementModel
from .rng import SampleStream, standard_normals

__all__ = [
    "StateModel",
    "toeplitz_cov",
    "build_state_model",
    "snr_db",
    "snr_to_noise_variance",
    "cholesky_lower",
    "logdet_spd",
    "check_psd",
    "attacked_cov",
    "mutual_information",
    "kl_divergence",
    "sample_mvn",
]

PSD_RTOL = 1e-9


def toeplitz_cov(n: int, rho: float) -> np.ndarray:
    """Covariance with entries ``rho ** |i - j|``."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    if n < 1:
        raise DomainError("dimension must be positive")
    return linalg.toeplitz(float(rho) ** np.arange(n))


def cholesky_lower(S: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(S, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"matrix is not positive definite: {exc}") from None


def logdet_spd(S: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(S)))))


def check_psd(S, m: int, name: str = "sigma_aa") -> np.ndarray:
    """Validate an ``m x m`` symmetric PSD matrix and return it as float array."""
    S = np.asarray(S, dtype=float)
    if S.shape != (m, m):
        raise DomainError(f"{name} must be {m}x{m}, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))) if S.size else 1.0)
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError(f"{name} is not symmetric")
    if np.count_nonzero(S - np.diag(np.diag(S))) == 0:
        eig = np.diag(S)
    else:
        eig = linalg.eigvalsh(S)
    if eig.size and eig.min() < -PSD_RTOL * max(1.0, float(eig.max())):
        raise DomainError(f"{name} is not positive semidefinite (min eigenvalue {eig.min():.3e})")
    return S


@dataclasses.dataclass(frozen=True, eq=False)
class StateModel:
    """Bayesian state prior together with the induced observation statistics."""

    jacobian: np.ndarray
    noise_variance: float
    sigma_xx: np.ndarray
    sigma_yy: np.ndarray
    w: np.ndarray
    chol_yy: np.ndarray
    rho: float | None = None

    @property
    def m(self) -> int:
        return self.sigma_yy.shape[0]

    @property
    def n(self) -> int:
        return self.sigma_xx.shape[0]

    @property
    def logdet_yy(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol_yy))))

    @property
    def signal_cov(self) -> np.ndarray:
        """``H Sigma_XX H^T``."""
        return self.sigma_yy - self.noise_variance * np.eye(self.m)


def build_state_model(meas: MeasurementModel, rho: float | None = None, *, sigma_xx=None) -> StateModel:
    """Form ``Sigma_YY = H Sigma_XX H^T + sigma^2 I`` and its inverse ``W``.

    ``sigma_xx`` defaults to the Toeplitz model with decay ``rho``.
    """
    H = meas.jacobian
    if sigma_xx is None:
        if rho is None:
            raise DomainError("either rho or sigma_xx is required")
        sigma_xx = toeplitz_cov(H.shape[1], rho)
    else:
        sigma_xx = check_psd(sigma_xx, H.shape[1], "sigma_xx")
    sigma_yy = H @ sigma_xx @ H.T + meas.noise_variance * np.eye(H.shape[0])
    sigma_yy = 0.5 * (sigma_yy + sigma_yy.T)
    chol = cholesky_lower(sigma_yy)
    w = linalg.cho_solve((chol, True), np.eye(H.shape[0]))
    w = 0.5 * (w + w.T)
    for a in (sigma_xx, sigma_yy, w, chol):
        a.setflags(write=False)
    return StateModel(
        jacobian=H,
        noise_variance=float(meas.noise_variance),
        sigma_xx=sigma_xx,
        sigma_yy=sigma_yy,
        w=w,
        chol_yy=chol,
        rho=rho,
    )


def _signal_power(H, sigma_xx) -> float:
    H = np.asarray(H, dtype=float)
    return float(np.einsum("ij,jk,ik->", H, sigma_xx, H))


def snr_db(H, sigma_xx, noise_variance: float) -> float:
    """``10 log10(tr(H Sigma_XX H^T) / (m sigma^2))``."""
    m = np.asarray(H).shape[0]
    return 10.0 * math.log10(_signal_power(H, sigma_xx) / (m * noise_variance))


def snr_to_noise_variance(H, sigma_xx, snr_db: float) -> float:
    power = _signal_power(H, sigma_xx)
    if not power > 0:
        raise DomainError("trace of H Sigma_XX H^T must be positive")
    m = np.asarray(H).shape[0]
    return power / (m * 10.0 ** (snr_db / 10.0))


def attacked_cov(state: StateModel, sigma_aa) -> np.ndarray:
    """Covariance of the compromised observations."""
    return state.sigma_yy + check_psd(sigma_aa, state.m)


def mutual_information(state: StateModel, sigma_aa) -> float:
    """``I(X; Y_A)`` for additive Gaussian attack with covariance ``sigma_aa``."""
    S = check_psd(sigma_aa, state.m)
    noise = state.noise_variance * np.eye(state.m) + S
    value = 0.5 * (logdet_spd(state.sigma_yy + S) - logdet_spd(noise))
    return max(value, 0.0)


def kl_divergence(state: StateModel, sigma_aa) -> float:
    """``D(P_{Y_A} || P_Y)`` between the zero-mean attacked and nominal laws."""
    S = check_psd(sigma_aa, state.m)
    trace = float(np.sum(state.w * S))
    logdet_ratio = logdet_spd(state.sigma_yy + S) - state.logdet_yy
    return max(0.5 * (trace - logdet_ratio), 0.0)


def sample_mvn(chol_factor, stream: SampleStream) -> np.ndarray:
    """One draw ``L g`` with ``g`` the standard normal vector of ``stream``."""
    L = np.asarray(chol_factor, dtype=float)
    g = standard_normals(stream, L.shape[0])[0]
    return L @ g

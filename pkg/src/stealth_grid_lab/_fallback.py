"""Pure numpy implementation of the Monte Carlo kernels.

Must stay draw-for-draw identical to ``_kernels.pyx``: same counter hash,
same uniform mapping, same Box-Muller branch.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.linalg import solve_triangular

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
TRIAL_MULT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_PI = 6.283185307179586
_INV_2_53 = 1.0 / 9007199254740992.0

# fixed so results never depend on the thread count
CHUNK = 2048


def _mix64(x):
    z = x + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def standard_normals(key, trial_start, n_trials, m):
    """Return an ``(n_trials, m)`` block of N(0, 1) draws for consecutive trials."""
    trials = np.arange(trial_start, trial_start + n_trials, dtype=np.uint64)
    tk = _mix64(np.uint64(key) ^ (trials * TRIAL_MULT))
    counters = np.arange(2 * m, dtype=np.uint64) * GOLDEN
    words = _mix64(tk[:, None] + counters[None, :])
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    radius = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    return radius * np.cos(_TWO_PI * u[:, 1::2])


def transfer_factors(L0, L1):
    """Return ``(L1^-1 L0, L0^-1 L1)``, both lower triangular.

    For ``y = L0 g`` the nominal quadratic form is ``g'g`` and the attacked one
    is ``|L1^-1 L0 g|^2``; symmetrically for ``y = L1 g``. No per-trial solves.
    """
    L0 = np.ascontiguousarray(L0, dtype=np.float64)
    L1 = np.ascontiguousarray(L1, dtype=np.float64)
    M = solve_triangular(L1, L0, lower=True, check_finite=False)
    N = solve_triangular(L0, L1, lower=True, check_finite=False)
    return np.ascontiguousarray(np.tril(M)), np.ascontiguousarray(np.tril(N))


def _gap_chunk(key, start, count, M, N):
    G = standard_normals(key, start, count, M.shape[0])
    gg = np.einsum("ij,ij->i", G, G)
    A = G @ M.T
    B = G @ N.T
    return 0.5 * (gg - np.einsum("ij,ij->i", A, A)), 0.5 * (np.einsum("ij,ij->i", B, B) - gg)


def half_quadratic_gap(key, trial_start, n_trials, L0, L1, n_threads=1):
    """Per-trial ``(y'S0^-1 y - y'S1^-1 y) / 2`` for ``y = L0 g`` and ``y = L1 g``.

    Both hypotheses reuse the same standard-normal vector ``g`` of each trial.
    Returns two arrays of length ``n_trials``.
    """
    M, N = transfer_factors(L0, L1)
    starts = range(trial_start, trial_start + n_trials, CHUNK)
    jobs = [(s, min(CHUNK, trial_start + n_trials - s)) for s in starts]
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(lambda j: _gap_chunk(key, j[0], j[1], M, N), jobs))
    else:
        parts = [_gap_chunk(key, s, c, M, N) for s, c in jobs]
    if not parts:
        return np.empty(0), np.empty(0)
    h0 = np.concatenate([p[0] for p in parts])
    h1 = np.concatenate([p[1] for p in parts])
    return h0, h1

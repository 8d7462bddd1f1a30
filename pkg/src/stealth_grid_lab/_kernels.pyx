# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels (counter-based normals and LRT statistics).

Mirrors ``_fallback.py`` draw for draw; each trial is computed independently
from its own counter so results do not depend on the OpenMP thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel
from libc.math cimport sqrt, log, cos
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

from ._fallback import transfer_factors

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t TRIAL_MULT = 0xD1B54A32D192ED03ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void fill_normals(uint64_t key, uint64_t trial, Py_ssize_t m,
                              double* out) noexcept nogil:
    cdef uint64_t tk = mix64(key ^ (trial * TRIAL_MULT))
    cdef Py_ssize_t j
    cdef double u1, u2
    for j in range(m):
        u1 = (<double>(mix64(tk + (<uint64_t>(2 * j)) * GOLDEN) >> 11) + 0.5) * INV_2_53
        u2 = (<double>(mix64(tk + (<uint64_t>(2 * j + 1)) * GOLDEN) >> 11) + 0.5) * INV_2_53
        out[j] = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef inline double lower_norm2(const double[:, ::1] T, const double* x,
                              Py_ssize_t m) noexcept nogil:
    # |T x|^2 for lower-triangular T; two accumulators let the row loop pipeline
    cdef Py_ssize_t i, j
    cdef double a0, a1, total = 0.0
    for i in range(m):
        a0 = 0.0
        a1 = 0.0
        j = 0
        while j + 1 <= i:
            a0 = a0 + T[i, j] * x[j]
            a1 = a1 + T[i, j + 1] * x[j + 1]
            j = j + 2
        if j == i:
            a0 = a0 + T[i, j] * x[j]
        a0 = a0 + a1
        total = total + a0 * a0
    return total


cdef inline double norm2(const double* x, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j
    cdef double total = 0.0
    for j in range(m):
        total = total + x[j] * x[j]
    return total


def standard_normals(key, trial_start, n_trials, m):
    cdef uint64_t k = <uint64_t>int(key)
    cdef uint64_t start = <uint64_t>int(trial_start)
    cdef Py_ssize_t nt = n_trials, mm = m, t
    out = np.empty((nt, mm), dtype=np.float64)
    cdef double[:, ::1] view = out
    with nogil:
        for t in range(nt):
            fill_normals(k, start + <uint64_t>t, mm, &view[t, 0] if mm > 0 else NULL)
    return out


def half_quadratic_gap(key, trial_start, n_trials, L0, L1, int n_threads=1):
    M, N = transfer_factors(L0, L1)
    cdef const double[:, ::1] A = M
    cdef const double[:, ::1] B = N
    cdef uint64_t k = <uint64_t>int(key)
    cdef uint64_t start = <uint64_t>int(trial_start)
    cdef Py_ssize_t nt = n_trials, m = A.shape[0], t
    cdef double gg
    h0 = np.empty(nt, dtype=np.float64)
    h1 = np.empty(nt, dtype=np.float64)
    cdef double[::1] o0 = h0
    cdef double[::1] o1 = h1
    cdef double* g
    if nt == 0:
        return h0, h1
    if n_threads < 1:
        n_threads = 1
    with nogil, parallel(num_threads=n_threads):
        g = <double*>malloc(m * sizeof(double))
        for t in prange(nt, schedule="static"):
            fill_normals(k, start + <uint64_t>t, m, g)
            gg = norm2(g, m)
            o0[t] = 0.5 * (gg - lower_norm2(A, g, m))
            o1[t] = 0.5 * (lower_norm2(B, g, m) - gg)
        free(g)
    return h0, h1

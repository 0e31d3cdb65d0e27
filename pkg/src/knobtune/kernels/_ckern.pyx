# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric hot paths: Matern 5/2 covariance, expected improvement,
and sparse sign-hash projection expansion."""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, exp, sqrt

cnp.import_array()

cdef double SQRT5 = sqrt(5.0)
cdef double INV_SQRT2 = 1.0 / sqrt(2.0)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * 3.14159265358979323846)


def matern52_cross(double[:, ::1] x1, double[:, ::1] x2, double lengthscale):
    """Matern 5/2 correlation matrix between two point sets."""
    cdef Py_ssize_t n = x1.shape[0]
    cdef Py_ssize_t m = x2.shape[0]
    cdef Py_ssize_t k = x1.shape[1]
    cdef Py_ssize_t i, j, q
    cdef double r2, r, t, diff
    cdef double inv = 1.0 / lengthscale
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        for j in range(m):
            r2 = 0.0
            for q in range(k):
                diff = x1[i, q] - x2[j, q]
                r2 += diff * diff
            r = sqrt(r2) * inv
            t = SQRT5 * r
            o[i, j] = (1.0 + t + (5.0 / 3.0) * r * r) * exp(-t)
    return out


def expected_improvement(double[::1] mu, double[::1] var, double best):
    """Expected improvement of each candidate over ``best``."""
    cdef Py_ssize_t n = mu.shape[0]
    cdef Py_ssize_t i
    cdef double sd, gain, z, cdf, pdf, e
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        if var[i] > 0.0:
            sd = sqrt(var[i])
            gain = mu[i] - best
            z = gain / sd
            cdf = 0.5 * (1.0 + erf(z * INV_SQRT2))
            pdf = INV_SQRT_2PI * exp(-0.5 * z * z)
            e = gain * cdf + sd * pdf
            o[i] = e if e > 0.0 else 0.0
    return out


def hesbo_expand(cnp.int64_t[::1] h, double[::1] sigma, double[:, ::1] points):
    """Expand (n, d) low-dim points to (n, D) via a one-nonzero-per-row map."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t D = h.shape[0]
    cdef Py_ssize_t i, j
    out = np.empty((n, D), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        for j in range(D):
            o[i, j] = sigma[j] * points[i, h[j]]
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the inner loops; see _ref.py for the contract."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, cos, exp, sin, sqrt

cnp.import_array()

DEF TWO_PI = 6.283185307179586476925287


def window_bounds(int d, double k0):
    return <int>ceil(k0) - d // 2


def window_amplitudes(int d, double k0, double sigma, double j0):
    cdef int lo = <int>ceil(k0) - d // 2
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(d, dtype=np.complex128)
    cdef double[::1] env = np.empty(d, dtype=np.float64)
    cdef double x, norm = 0.0, ph, a
    cdef double s2 = sigma * sigma
    cdef int i, k
    for i in range(d):
        x = (lo + i) - k0
        env[i] = exp(-0.5 * TWO_PI * x * x / s2)
        norm += env[i] * env[i]
    norm = sqrt(norm)
    for i in range(d):
        k = (lo + i) % d
        if k < 0:
            k += d
        x = (lo + i) - k0
        ph = TWO_PI * j0 * x / d
        a = env[i] / norm
        out[k] = a * cos(ph) + 1j * a * sin(ph)
    return out


def window_derivative(int d, double k0, double sigma, double j0):
    cdef int lo = <int>ceil(k0) - d // 2
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(d, dtype=np.complex128)
    cdef double[::1] env = np.empty(d, dtype=np.float64)
    cdef double x, norm = 0.0, ph, a, fr, fi
    cdef double s2 = sigma * sigma
    cdef double complex val
    cdef int i, k
    for i in range(d):
        x = (lo + i) - k0
        env[i] = exp(-0.5 * TWO_PI * x * x / s2)
        norm += env[i] * env[i]
    norm = sqrt(norm)
    for i in range(d):
        k = (lo + i) % d
        if k < 0:
            k += d
        x = (lo + i) - k0
        ph = TWO_PI * j0 * x / d
        a = env[i] / norm
        val = a * cos(ph) + 1j * a * sin(ph)
        fr = TWO_PI * x / s2
        fi = -TWO_PI * j0 / d
        out[k] = val * (fr + 1j * fi)
    return out


def memory_accumulate(cnp.complex128_t[:, :, ::1] kernels,
                      double[:, ::1] gaps,
                      double[::1] us,
                      double[::1] weights):
    cdef int n = kernels.shape[0]
    cdef int m = kernels.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros((m, m), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] acc = out
    cdef double w, u, ph
    cdef double complex rot
    cdef int i, a, b
    for i in range(n):
        w = weights[i]
        u = us[i]
        for a in range(m):
            for b in range(m):
                ph = -gaps[a, b] * u
                rot = cos(ph) + 1j * sin(ph)
                acc[a, b] = acc[a, b] + w * rot * kernels[i, a, b]
    return out

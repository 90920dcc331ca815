# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Pure-Python twins live in _kernels_py.py."""

from libc.math cimport exp, sin, fabs, ldexp, INFINITY, M_PI

cdef extern from *:
    """
    typedef unsigned __int128 dh_u128;
    static inline double dh_u128_to_double(dh_u128 x) { return (double)x; }
    """
    ctypedef unsigned long long dh_u128
    double dh_u128_to_double(dh_u128 x) nogil


def sensor_scan_128(unsigned long long hi, unsigned long long lo, long K):
    """min_{k<=K} k |sin(pi {k r})| for r = (hi*2^64 + lo) / 2^128.

    Distances ||k r|| not exceeding k * 2^-128 are unresolved and count as 0.
    Returns (minimum, argmin k).
    """
    cdef dh_u128 r = ((<dh_u128>hi) << 64) | (<dh_u128>lo)
    cdef dh_u128 acc = 0
    cdef dh_u128 neg, g
    cdef double best = INFINITY
    cdef double val
    cdef long k
    cdef long arg = 0
    with nogil:
        for k in range(1, K + 1):
            acc = acc + r
            neg = (~acc) + 1
            g = acc if acc < neg else neg
            if g <= <dh_u128>k:
                val = 0.0
            else:
                val = <double>k * sin(M_PI * ldexp(dh_u128_to_double(g), -128))
            if val < best:
                best = val
                arg = k
    return best, arg


def dirichlet_sup(const double[:] coeffs, const double[:] lambdas, const double[:] times):
    """max_j |sum_k c_k exp(-lambda_k t_j)| and its argmax index."""
    cdef Py_ssize_t n = coeffs.shape[0]
    cdef Py_ssize_t m = times.shape[0]
    cdef Py_ssize_t j, k
    cdef double s, best = -1.0
    cdef Py_ssize_t arg = 0
    with nogil:
        for j in range(m):
            s = 0.0
            for k in range(n):
                s += coeffs[k] * exp(-lambdas[k] * times[j])
            s = fabs(s)
            if s > best:
                best = s
                arg = j
    return best, arg


def dirichlet_sup_many(const double[:, :] coeffs, const double[:] lambdas,
                       const double[:] times, double[:] out):
    """Row-wise dirichlet_sup into ``out`` (one row of coefficients per draw)."""
    cdef Py_ssize_t d = coeffs.shape[0]
    cdef Py_ssize_t n = coeffs.shape[1]
    cdef Py_ssize_t m = times.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s, best
    cdef double[:, :] table
    import numpy as np
    table_arr = np.empty((m, n))
    table = table_arr
    for j in range(m):
        for k in range(n):
            table[j, k] = exp(-lambdas[k] * times[j])
    with nogil:
        for i in range(d):
            best = 0.0
            for j in range(m):
                s = 0.0
                for k in range(n):
                    s += coeffs[i, k] * table[j, k]
                s = fabs(s)
                if s > best:
                    best = s
            out[i] = best

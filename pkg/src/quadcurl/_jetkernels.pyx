# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled truncated-Taylor product for point-major jet arrays."""

import numpy as np

cimport numpy as cnp


def jet_mul(const double[:, ::1] a, const double[:, ::1] b,
            const cnp.int64_t[::1] target, const cnp.int64_t[::1] left,
            const cnp.int64_t[::1] right, Py_ssize_t ncoef):
    cdef Py_ssize_t npts = a.shape[0]
    cdef Py_ssize_t nt = target.shape[0]
    cdef Py_ssize_t p, t
    out = np.zeros((npts, ncoef))
    cdef double[:, ::1] o = out
    with nogil:
        for p in range(npts):
            for t in range(nt):
                o[p, target[t]] += a[p, left[t]] * b[p, right[t]]
    return out


def jet_horner(const double[:, ::1] delta, const double[:, ::1] series,
               const cnp.int64_t[::1] target, const cnp.int64_t[::1] left,
               const cnp.int64_t[::1] right, Py_ssize_t ncoef):
    """``sum_m series[p, m] * delta**m`` with ``delta`` having zero constant term."""
    cdef Py_ssize_t npts = delta.shape[0]
    cdef Py_ssize_t nt = target.shape[0]
    cdef Py_ssize_t nterms = series.shape[1]
    cdef Py_ssize_t p, t, m, c
    out = np.zeros((npts, ncoef))
    cdef double[:, ::1] o = out
    cdef double[::1] acc = np.zeros(ncoef)
    cdef double[::1] tmp = np.zeros(ncoef)
    with nogil:
        for p in range(npts):
            for c in range(ncoef):
                acc[c] = 0.0
            acc[0] = series[p, nterms - 1]
            for m in range(nterms - 2, -1, -1):
                for c in range(ncoef):
                    tmp[c] = 0.0
                for t in range(nt):
                    tmp[target[t]] += acc[left[t]] * delta[p, right[t]]
                tmp[0] += series[p, m]
                for c in range(ncoef):
                    acc[c] = tmp[c]
            for c in range(ncoef):
                o[p, c] = acc[c]
    return out

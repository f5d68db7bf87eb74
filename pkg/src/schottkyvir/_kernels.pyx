# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the Poincare-series shell kernels.

Same contracts as ``_kernels_py``: flat (n, 4) det-1 matrices grouped in
word-length shells, paired point arrays, per-shell partial sums plus the
minimum pole distance.  Plain C loops; no temporaries of size
(group x points).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef inline double _cabs(cplx z) nogil:
    return (z.real * z.real + z.imag * z.imag) ** 0.5


cdef inline cplx _cpow_int(cplx z, long n) nogil:
    cdef cplx out = 1.0 + 0.0j
    cdef long k
    for k in range(n):
        out = out * z
    return out


def mobius_apply(const cplx[:, ::1] mats, const cplx[::1] x):
    cdef Py_ssize_t n = mats.shape[0], P = x.shape[0], i, p
    gx_np = np.empty((n, P), dtype=complex)
    dgx_np = np.empty((n, P), dtype=complex)
    cdef cplx[:, ::1] gx = gx_np
    cdef cplx[:, ::1] dgx = dgx_np
    cdef cplx den
    with nogil:
        for i in range(n):
            for p in range(P):
                den = mats[i, 2] * x[p] + mats[i, 3]
                gx[i, p] = (mats[i, 0] * x[p] + mats[i, 1]) / den
                dgx[i, p] = 1.0 / (den * den)
    return gx_np, dgx_np


def omega_partials(const cplx[:, ::1] mats, const long long[::1] offsets, const cplx[::1] x, const cplx[::1] y):
    cdef Py_ssize_t S = offsets.shape[0] - 1, P = x.shape[0]
    out_np = np.zeros((S, P), dtype=complex)
    cdef cplx[:, ::1] out = out_np
    cdef double mind = np.inf
    cdef Py_ssize_t s, i, p
    cdef cplx den, gx, dgx, diff, acc
    cdef double d
    with nogil:
        for p in range(P):
            for s in range(S):
                acc = 0
                for i in range(offsets[s], offsets[s + 1]):
                    den = mats[i, 2] * x[p] + mats[i, 3]
                    gx = (mats[i, 0] * x[p] + mats[i, 1]) / den
                    dgx = 1.0 / (den * den)
                    diff = gx - y[p]
                    d = _cabs(diff)
                    if d < mind:
                        mind = d
                    acc = acc + dgx / (diff * diff)
                out[s, p] = acc
    return out_np, mind


def omega_n_partials(const cplx[:, ::1] mats, const long long[::1] offsets, const cplx[::1] x,
                     const cplx[::1] y, long order):
    cdef Py_ssize_t S = offsets.shape[0] - 1, P = x.shape[0]
    out_np = np.zeros((S, P), dtype=complex)
    cdef cplx[:, ::1] out = out_np
    cdef double mind = np.inf
    cdef Py_ssize_t s, i, p
    cdef cplx den, gx, dgx, diff, acc
    cdef double d
    with nogil:
        for p in range(P):
            for s in range(S):
                acc = 0
                for i in range(offsets[s], offsets[s + 1]):
                    den = mats[i, 2] * x[p] + mats[i, 3]
                    gx = (mats[i, 0] * x[p] + mats[i, 1]) / den
                    dgx = 1.0 / (den * den)
                    diff = gx - y[p]
                    d = _cabs(diff)
                    if d < mind:
                        mind = d
                    acc = acc + _cpow_int(dgx / (diff * diff), order)
                out[s, p] = acc
    return out_np, mind


def proj_conn_partials(const cplx[:, ::1] mats, const long long[::1] offsets, const cplx[::1] x):
    cdef Py_ssize_t S = offsets.shape[0] - 2, P = x.shape[0]
    out_np = np.zeros((S, P), dtype=complex)
    cdef cplx[:, ::1] out = out_np
    cdef double mind = np.inf
    cdef Py_ssize_t s, i, p
    cdef cplx den, gx, dgx, diff, acc
    cdef double d
    with nogil:
        for p in range(P):
            for s in range(S):
                acc = 0
                for i in range(offsets[s + 1], offsets[s + 2]):
                    den = mats[i, 2] * x[p] + mats[i, 3]
                    gx = (mats[i, 0] * x[p] + mats[i, 1]) / den
                    dgx = 1.0 / (den * den)
                    diff = gx - x[p]
                    d = _cabs(diff)
                    if d < mind:
                        mind = d
                    acc = acc + dgx / (diff * diff)
                out[s, p] = acc
    return out_np, mind


def cauchy_pair_partials(const cplx[:, ::1] mats, const long long[::1] offsets, const cplx[::1] x,
                         const cplx[::1] y_plus, const cplx[::1] y_minus):
    cdef Py_ssize_t S = offsets.shape[0] - 1, P = x.shape[0]
    out_np = np.zeros((S, P), dtype=complex)
    cdef cplx[:, ::1] out = out_np
    cdef double mind = np.inf
    cdef Py_ssize_t s, i, p
    cdef cplx den, gx, dgx, dp, dm, acc
    cdef double d1, d2
    with nogil:
        for p in range(P):
            for s in range(S):
                acc = 0
                for i in range(offsets[s], offsets[s + 1]):
                    den = mats[i, 2] * x[p] + mats[i, 3]
                    gx = (mats[i, 0] * x[p] + mats[i, 1]) / den
                    dgx = 1.0 / (den * den)
                    dp = gx - y_plus[p]
                    dm = gx - y_minus[p]
                    d1 = _cabs(dp)
                    d2 = _cabs(dm)
                    if d1 < mind:
                        mind = d1
                    if d2 < mind:
                        mind = d2
                    acc = acc + dgx * (1.0 / dp - 1.0 / dm)
                out[s, p] = acc
    return out_np, mind


def psi_partials(const cplx[:, ::1] mats, const long long[::1] offsets, const cplx[::1] x,
                 const cplx[::1] y, const cplx[::1] limit_pts, long order):
    cdef Py_ssize_t S = offsets.shape[0] - 1, P = x.shape[0]
    cdef Py_ssize_t nA = limit_pts.shape[0]
    out_np = np.zeros((S, P), dtype=complex)
    cdef cplx[:, ::1] out = out_np
    cdef double mind = np.inf
    cdef Py_ssize_t s, i, p, l
    cdef cplx den, gx, dgx, diff, acc, t
    cdef double d
    with nogil:
        for p in range(P):
            for s in range(S):
                acc = 0
                for i in range(offsets[s], offsets[s + 1]):
                    den = mats[i, 2] * x[p] + mats[i, 3]
                    gx = (mats[i, 0] * x[p] + mats[i, 1]) / den
                    dgx = 1.0 / (den * den)
                    diff = gx - y[p]
                    d = _cabs(diff)
                    if d < mind:
                        mind = d
                    t = _cpow_int(dgx, order) / diff
                    for l in range(nA):
                        # a deep orbit point rounded exactly onto a limit
                        # point: the term is below double resolution
                        if gx == limit_pts[l]:
                            t = 0.0
                            break
                        t = t * (y[p] - limit_pts[l]) / (gx - limit_pts[l])
                    acc = acc + t
                out[s, p] = acc
    return out_np, mind

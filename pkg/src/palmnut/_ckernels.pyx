# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``.

Every loop keeps the operation order of the numpy version.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fmax, hypot, sqrt

cnp.import_array()


cdef inline double _cabs(double re, double im) nogil:
    # plain sqrt unless squaring could overflow or underflow
    cdef double s = re * re + im * im
    if 1e-290 < s < 1e290:
        return sqrt(s)
    return hypot(re, im)

cdef double _S3 = sqrt(3.0)
cdef double _DEN = 4.0 * sqrt(2.0)
cdef double H0 = (1.0 + _S3) / _DEN
cdef double H1 = (3.0 + _S3) / _DEN
cdef double H2 = (3.0 - _S3) / _DEN
cdef double H3 = (1.0 - _S3) / _DEN
cdef double G0 = H3
cdef double G1 = -H2
cdef double G2 = H1
cdef double G3 = -H0


def dwt4_rows_forward(const double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], n = x.shape[1], half = n // 2
    cdef Py_ssize_t r, k, i0, i2
    cdef double x0, x1, x2, x3
    out = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for r in range(rows):
            for k in range(half):
                i0 = 2 * k
                i2 = i0 + 2
                if i2 >= n:
                    i2 = i2 - n
                x0 = x[r, i0]
                x1 = x[r, i0 + 1]
                x2 = x[r, i2]
                x3 = x[r, i2 + 1]
                o[r, k] = H0 * x0 + H1 * x1 + H2 * x2 + H3 * x3
                o[r, half + k] = G0 * x0 + G1 * x1 + G2 * x2 + G3 * x3
    return out


def dwt4_rows_inverse(const double[:, ::1] c):
    cdef Py_ssize_t rows = c.shape[0], n = c.shape[1], half = n // 2
    cdef Py_ssize_t r, k, km1
    cdef double a, d, am1, dm1
    out = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for r in range(rows):
            for k in range(half):
                km1 = k - 1 if k > 0 else half - 1
                a = c[r, k]
                d = c[r, half + k]
                am1 = c[r, km1]
                dm1 = c[r, half + km1]
                o[r, 2 * k] = H0 * a + G0 * d + H2 * am1 + G2 * dm1
                o[r, 2 * k + 1] = H1 * a + G1 * d + H3 * am1 + G3 * dm1
    return out


def unit_modulus(const double[::1] z):
    """``z`` is an interleaved (re, im) float64 view of a complex vector."""
    cdef Py_ssize_t i, n = z.shape[0] // 2
    cdef double re, im, mag
    out = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            re = z[2 * i]
            im = z[2 * i + 1]
            mag = _cabs(re, im)
            if mag > 0.0:
                o[2 * i] = re / mag
                o[2 * i + 1] = im / mag
            else:
                o[2 * i] = 1.0
                o[2 * i + 1] = 0.0
    return out


def huber_weights(const double[::1] mag_sq, double xi):
    cdef Py_ssize_t i, n = mag_sq.shape[0]
    cdef double t
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = 1.0 / fmax(xi, sqrt(mag_sq[i]))
    return out


def huber_sum(const double[::1] mag_sq, double xi):
    cdef Py_ssize_t i, n = mag_sq.shape[0]
    cdef double t, acc = 0.0
    with nogil:
        for i in range(n):
            t = sqrt(mag_sq[i])
            if t <= xi:
                acc += mag_sq[i] / (2.0 * xi)
            else:
                acc += t - 0.5 * xi
    return acc


def soft_threshold_complex(const double[::1] a, const double[::1] tau):
    cdef Py_ssize_t i, n = a.shape[0] // 2
    cdef double re, im, mag, s
    out = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            re = a[2 * i]
            im = a[2 * i + 1]
            mag = _cabs(re, im)
            if mag > 0.0:
                s = mag - tau[i]
                s = (s if s > 0.0 else 0.0) / mag
            else:
                s = 0.0
            o[2 * i] = re * s
            o[2 * i + 1] = im * s
    return out


def soft_threshold_real(const double[::1] a, const double[::1] tau):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double mag, s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            mag = a[i] if a[i] >= 0.0 else -a[i]
            if mag > 0.0:
                s = mag - tau[i]
                s = (s if s > 0.0 else 0.0) / mag
            else:
                s = 0.0
            o[i] = a[i] * s
    return out

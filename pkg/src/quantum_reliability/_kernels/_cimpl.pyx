# cython: language_level=3
"""Compiled versions of the kernels in ``_pyimpl``.

Matrix-vector products go through BLAS ``zgemv`` (via SciPy's Cython
bindings) without returning to Python between steps; very short vectors use
a plain loop, where the BLAS call overhead would dominate.
"""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()

cdef Py_ssize_t SMALL = 8


cdef inline void _matvec_small(double complex *a, double complex *x, double complex *y,
                               Py_ssize_t rows, Py_ssize_t cols) noexcept nogil:
    # y[r] = sum_c a[r, c] x[c] for row-major a
    cdef Py_ssize_t r, c
    cdef double re, im, ar, ai, xr, xi
    for r in range(rows):
        re = 0.0
        im = 0.0
        for c in range(cols):
            ar = a[r * cols + c].real
            ai = a[r * cols + c].imag
            xr = x[c].real
            xi = x[c].imag
            re = re + ar * xr - ai * xi
            im = im + ar * xi + ai * xr
        y[r].real = re
        y[r].imag = im


def iterate_map(s, v0, Py_ssize_t n):
    cdef double complex[:, ::1] sm = np.ascontiguousarray(s, dtype=np.complex128)
    v = np.array(v0, dtype=np.complex128).reshape(-1)
    cdef Py_ssize_t m = v.shape[0]
    if sm.shape[0] != m or sm.shape[1] != m:
        raise ValueError(f"map shape {(sm.shape[0], sm.shape[1])} does not act on vectors of size {m}")
    if n < 0:
        raise ValueError("n must be non-negative")
    out_arr = np.empty((n + 1, m), dtype=np.complex128)
    out_arr[0] = v
    if m == 0 or n == 0:
        return out_arr
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t k
    cdef char trans = b'T'
    cdef int mi = <int>m
    cdef int inc = 1
    cdef double complex one = 1.0
    cdef double complex zero = 0.0
    with nogil:
        if m <= SMALL:
            for k in range(n):
                _matvec_small(&sm[0, 0], &out[k, 0], &out[k + 1, 0], m, m)
        else:
            # row-major s is column-major s^T, so the transposed product is s @ x
            for k in range(n):
                zgemv(&trans, &mi, &mi, &one, &sm[0, 0], &mi, &out[k, 0], &inc, &zero, &out[k + 1, 0], &inc)
    return out_arr


def toeplitz_bilinear(a, b):
    cdef double complex[:, ::1] am = np.ascontiguousarray(a, dtype=np.complex128)
    cdef double complex[:, ::1] bm = np.ascontiguousarray(b, dtype=np.complex128)
    if am.shape[0] != bm.shape[0] or am.shape[1] != bm.shape[1]:
        raise ValueError(f"shape mismatch {(am.shape[0], am.shape[1])} vs {(bm.shape[0], bm.shape[1])}")
    cdef Py_ssize_t k = am.shape[0]
    cdef Py_ssize_t m = am.shape[1]
    out_arr = np.zeros((k, k), dtype=np.complex128)
    if k == 0 or m == 0:
        return out_arr
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i
    cdef char trans = b'T'
    cdef int mi = <int>m
    cdef int rows
    cdef int inc = 1
    cdef double complex one = 1.0
    cdef double complex zero = 0.0
    with nogil:
        for i in range(k):
            # out[i, i + n] = a[n] . b[i] for n < k - i
            rows = <int>(k - i)
            if m <= SMALL:
                _matvec_small(&am[0, 0], &bm[i, 0], &out[i, i], rows, m)
            else:
                zgemv(&trans, &mi, &rows, &one, &am[0, 0], &mi, &bm[i, 0], &inc, &zero, &out[i, i], &inc)
    return out_arr

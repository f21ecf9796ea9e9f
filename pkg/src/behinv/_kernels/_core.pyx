# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: state recursion, block-Hankel fill, box ADMM."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def simulate_lti(const double[:, ::1] A, const double[:, ::1] B,
                 const double[:, ::1] C, const double[:, ::1] D,
                 const double[::1] x0, const double[:, ::1] u):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t p = C.shape[0]
    cdef Py_ssize_t T = u.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double acc

    x_arr = np.empty((T + 1, n), dtype=np.float64)
    y_arr = np.empty((T, p), dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] y = y_arr

    for i in range(n):
        x[0, i] = x0[i]
    for k in range(T):
        for i in range(p):
            acc = 0.0
            for j in range(n):
                acc += C[i, j] * x[k, j]
            for j in range(m):
                acc += D[i, j] * u[k, j]
            y[k, i] = acc
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[k, j]
            for j in range(m):
                acc += B[i, j] * u[k, j]
            x[k + 1, i] = acc
    return x_arr, y_arr


def block_hankel(const double[:, ::1] values, Py_ssize_t t):
    cdef Py_ssize_t length = values.shape[0]
    cdef Py_ssize_t q = values.shape[1]
    cdef Py_ssize_t cols = length - t + 1
    cdef Py_ssize_t r, c, i

    out_arr = np.empty((q * t, cols), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for r in range(t):
        for i in range(q):
            for c in range(cols):
                out[r * q + i, c] = values[r + c, i]
    return out_arr


cdef inline double _clip(double v, double lo, double hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def admm_box(const double[::1] w0, const double[:, ::1] Q2,
             const double[:, ::1] F, const double[::1] r,
             const double[::1] lo, const double[::1] hi,
             double rho, Py_ssize_t max_iter, double tol):
    cdef Py_ssize_t nw = w0.shape[0]
    cdef Py_ssize_t nv = F.shape[0]
    cdef Py_ssize_t it = 0, i, j
    cdef double acc, prim = 0.0, dual = 0.0, diff

    w_arr = np.zeros(nw, dtype=np.float64)
    v_arr = np.zeros(nv, dtype=np.float64)
    lam_arr = np.zeros(nv, dtype=np.float64)
    cdef double[::1] w = w_arr
    cdef double[::1] v = v_arr
    cdef double[::1] lam = lam_arr
    cdef double[::1] rhs = np.empty(nv, dtype=np.float64)
    cdef double[::1] fw = np.empty(nv, dtype=np.float64)
    cdef double[::1] dv = np.empty(nv, dtype=np.float64)

    for i in range(nv):
        v[i] = _clip(r[i], lo[i], hi[i])

    while it < max_iter:
        it += 1
        for i in range(nv):
            rhs[i] = v[i] - r[i] - lam[i]
        for i in range(nw):
            acc = w0[i]
            for j in range(nv):
                acc += Q2[i, j] * rhs[j]
            w[i] = acc
        prim = 0.0
        for i in range(nv):
            acc = r[i]
            for j in range(nw):
                acc += F[i, j] * w[j]
            fw[i] = acc
            diff = _clip(acc + lam[i], lo[i], hi[i])
            dv[i] = diff - v[i]
            v[i] = diff
            lam[i] += acc - diff
            prim += (acc - diff) * (acc - diff)
        prim = sqrt(prim)
        dual = 0.0
        for j in range(nw):
            acc = 0.0
            for i in range(nv):
                acc += F[i, j] * dv[i]
            dual += acc * acc
        dual = rho * sqrt(dual)
        if prim <= tol and dual <= tol:
            break
    return w_arr, v_arr, lam_arr, it, prim, dual

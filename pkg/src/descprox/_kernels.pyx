# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics mirror ``descprox._kernels_py`` exactly."""

import numpy as np

from libc.math cimport sqrt, fabs, INFINITY

NORM_EUCLIDEAN = 0
NORM_MAX = 1
NORM_L1 = 2


cdef inline double _dist(const double[:, ::1] X, Py_ssize_t i,
                         const double[:, ::1] Y, Py_ssize_t j,
                         Py_ssize_t dim, int norm) noexcept nogil:
    cdef Py_ssize_t k
    cdef double d, s = 0.0
    if norm == 0:
        for k in range(dim):
            d = X[i, k] - Y[j, k]
            s += d * d
        return sqrt(s)
    elif norm == 1:
        for k in range(dim):
            d = fabs(X[i, k] - Y[j, k])
            if d > s:
                s = d
        return s
    else:
        for k in range(dim):
            s += fabs(X[i, k] - Y[j, k])
        return s


def min_pair_distance(const double[:, ::1] X, const double[:, ::1] Y, int norm=0):
    cdef Py_ssize_t i, j, dim = X.shape[1]
    cdef double d, best = INFINITY
    with nogil:
        for i in range(X.shape[0]):
            for j in range(Y.shape[0]):
                d = _dist(X, i, Y, j, dim, norm)
                if d < best:
                    best = d
    return best


def directed_hausdorff(const double[:, ::1] X, const double[:, ::1] Y, int norm=0):
    cdef Py_ssize_t i, j, dim = X.shape[1]
    cdef double d, inner, outer = 0.0
    with nogil:
        for i in range(X.shape[0]):
            inner = INFINITY
            for j in range(Y.shape[0]):
                d = _dist(X, i, Y, j, dim, norm)
                if d < inner:
                    inner = d
                    if inner <= outer:
                        # this row cannot raise the running maximum
                        break
            if inner > outer:
                outer = inner
    return outer


def hausdorff(const double[:, ::1] X, const double[:, ::1] Y, int norm=0):
    cdef double a = directed_hausdorff(X, Y, norm)
    cdef double b = directed_hausdorff(Y, X, norm)
    return a if a >= b else b


def first_return(const long long[::1] nxt, const double[:, ::1] desc,
                 Py_ssize_t m_max, double tol):
    cdef Py_ssize_t n = nxt.shape[0], dim = desc.shape[1]
    cdef Py_ssize_t i, k, m, cur
    cdef bint same
    out = np.zeros(n, dtype=np.int64)
    cdef long long[::1] res = out
    with nogil:
        for i in range(n):
            cur = i
            for m in range(1, m_max + 1):
                cur = nxt[cur]
                same = True
                for k in range(dim):
                    if fabs(desc[cur, k] - desc[i, k]) > tol:
                        same = False
                        break
                if same:
                    res[i] = m
                    break
    return out


def zero_crossings(const double[::1] m):
    cdef Py_ssize_t n = m.shape[0], i, p = -1
    cdef int s, sp = 0
    cdef list pos = []
    for i in range(n):
        if m[i] > 0:
            s = 1
        elif m[i] < 0:
            s = -1
        else:
            continue
        if sp != 0 and s != sp:
            if i == p + 1:
                pos.append(p + m[p] / (m[p] - m[i]))
            else:
                pos.append(0.5 * ((p + 1) + (i - 1)))
        p = i
        sp = s
    return np.asarray(pos, dtype=np.float64)


def segment_trapz(const double[::1] t, const double[::1] y,
                  const long long[::1] starts, const long long[::1] stops):
    cdef Py_ssize_t k, i
    cdef double acc
    out = np.empty(starts.shape[0], dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for k in range(starts.shape[0]):
            acc = 0.0
            for i in range(starts[k], stops[k]):
                acc += 0.5 * (t[i + 1] - t[i]) * (y[i] + y[i + 1])
            res[k] = acc
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: Jacobi sweeps, Cholesky, varimax planar sweeps.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and the same floating point operation order where practical.
"""
import numpy as np

from libc.math cimport atan2, cos, fabs, log, sin, sqrt


def jacobi_eigen(const double[:, ::1] a_in, double tol, int max_sweeps):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(diagonal, vectors, sweeps, off_norm)``. The caller decides
    whether ``off_norm < tol`` counts as converged.
    """
    cdef Py_ssize_t n = a_in.shape[0]
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, apq, theta, t, c, s, akp, akq, vkp, vkq, app, aqq

    a_arr = np.array(a_in, dtype=np.float64, copy=True)
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr

    while True:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        off = sqrt(2.0 * off)
        if off < tol or sweep >= max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[p, k] = a[k, p]
                        a[k, q] = s * akp + c * akq
                        a[q, k] = a[k, q]
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweep += 1

    return np.diag(a_arr).copy(), v_arr, sweep, off


def cholesky(const double[:, ::1] a_in):
    """Lower Cholesky factor. Returns ``(L, failed_pivot)``; pivot is -1 on success."""
    cdef Py_ssize_t n = a_in.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double acc
    l_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] l = l_arr
    for j in range(n):
        acc = a_in[j, j]
        for k in range(j):
            acc -= l[j, k] * l[j, k]
        if not acc > 0.0:
            return l_arr, j
        l[j, j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = a_in[i, j]
            for k in range(j):
                acc -= l[i, k] * l[j, k]
            l[i, j] = acc / l[j, j]
    return l_arr, -1


def cholesky_inverse(const double[:, ::1] l):
    """Inverse of ``L @ L.T`` given its lower Cholesky factor."""
    cdef Py_ssize_t n = l.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double acc
    w_arr = np.zeros((n, n), dtype=np.float64)
    out_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] out = out_arr
    # w = L^{-1}, lower triangular
    for j in range(n):
        w[j, j] = 1.0 / l[j, j]
        for i in range(j + 1, n):
            acc = 0.0
            for k in range(j, i):
                acc -= l[i, k] * w[k, j]
            w[i, j] = acc / l[i, i]
    # out = w.T @ w
    for i in range(n):
        for j in range(i + 1):
            acc = 0.0
            for k in range(i, n):
                acc += w[k, i] * w[k, j]
            out[i, j] = acc
            out[j, i] = acc
    return out_arr


def cholesky_logdet(const double[:, ::1] l):
    cdef Py_ssize_t n = l.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += log(l[i, i])
    return 2.0 * acc


cdef double _varimax_criterion(double[:, ::1] b):
    cdef Py_ssize_t p = b.shape[0], k = b.shape[1]
    cdef Py_ssize_t i, j
    cdef double s2, s4, x2, total = 0.0
    for j in range(k):
        s2 = 0.0
        s4 = 0.0
        for i in range(p):
            x2 = b[i, j] * b[i, j]
            s2 += x2
            s4 += x2 * x2
        total += p * s4 - s2 * s2
    return total / (<double>p * p)


def varimax_planar(const double[:, ::1] a_in, double tol, int max_sweeps):
    """Pairwise planar varimax rotations until a sweep gains less than ``tol``.

    Returns ``(rotated, T, sweeps, criteria)`` with ``rotated = a_in @ T``;
    ``criteria`` holds the criterion before the first sweep and after each one.
    """
    cdef Py_ssize_t p = a_in.shape[0], k = a_in.shape[1]
    cdef Py_ssize_t i, j, l
    cdef int sweep = 0
    cdef double su, sv, suu, suv, x, y, u, w, num, den, phi, c, s
    cdef double prev, cur

    b_arr = np.array(a_in, dtype=np.float64, copy=True)
    t_arr = np.eye(k, dtype=np.float64)
    cdef double[:, ::1] b = b_arr
    cdef double[:, ::1] t = t_arr

    cur = _varimax_criterion(b)
    criteria = [cur]
    while sweep < max_sweeps:
        prev = cur
        for j in range(k - 1):
            for l in range(j + 1, k):
                su = 0.0
                sv = 0.0
                suu = 0.0
                suv = 0.0
                for i in range(p):
                    x = b[i, j]
                    y = b[i, l]
                    u = x * x - y * y
                    w = 2.0 * x * y
                    su += u
                    sv += w
                    suu += u * u - w * w
                    suv += u * w
                num = 2.0 * suv - 2.0 * su * sv / p
                den = suu - (su * su - sv * sv) / p
                phi = atan2(num, den) / 4.0
                if phi == 0.0:
                    continue
                c = cos(phi)
                s = sin(phi)
                for i in range(p):
                    x = b[i, j]
                    y = b[i, l]
                    b[i, j] = x * c + y * s
                    b[i, l] = -x * s + y * c
                for i in range(k):
                    x = t[i, j]
                    y = t[i, l]
                    t[i, j] = x * c + y * s
                    t[i, l] = -x * s + y * c
        sweep += 1
        cur = _varimax_criterion(b)
        criteria.append(cur)
        if cur - prev < tol:
            break
    return b_arr, t_arr, sweep, criteria

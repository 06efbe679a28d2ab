"""Pure-Python (numpy) twin of the compiled ``_kernels`` module.

Same algorithms, same signatures; inner loops are vectorised over one
axis instead of being compiled.
"""
import math

import numpy as np


def jacobi_eigen(a_in, tol, max_sweeps):
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    iu = np.triu_indices(n, 1)
    sweep = 0
    while True:
        off = math.sqrt(2.0 * float(np.sum(a[iu] ** 2)))
        if off < tol or sweep >= max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = c * colp - s * colq
                newq = s * colp + c * colq
                a[:, p] = newp
                a[p, :] = newp
                a[:, q] = newq
                a[q, :] = newq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweep += 1
    return np.diag(a).copy(), v, sweep, off


def cholesky(a_in):
    a = np.asarray(a_in, dtype=np.float64)
    n = a.shape[0]
    l = np.zeros((n, n))
    for j in range(n):
        row = l[j, :j]
        acc = a[j, j] - row @ row
        if not acc > 0.0:
            return l, j
        l[j, j] = math.sqrt(acc)
        if j + 1 < n:
            l[j + 1:, j] = (a[j + 1:, j] - l[j + 1:, :j] @ row) / l[j, j]
    return l, -1


def cholesky_inverse(l):
    l = np.asarray(l, dtype=np.float64)
    n = l.shape[0]
    w = np.zeros((n, n))
    for j in range(n):
        w[j, j] = 1.0 / l[j, j]
        for i in range(j + 1, n):
            w[i, j] = -(l[i, j:i] @ w[j:i, j]) / l[i, i]
    out = w.T @ w
    return (out + out.T) / 2.0


def cholesky_logdet(l):
    return 2.0 * float(np.sum(np.log(np.diag(l))))


def _varimax_criterion(b):
    p = b.shape[0]
    b2 = b * b
    return float(np.sum(p * np.sum(b2 * b2, axis=0) - np.sum(b2, axis=0) ** 2)) / (p * p)


def varimax_planar(a_in, tol, max_sweeps):
    b = np.array(a_in, dtype=np.float64, copy=True)
    p, k = b.shape
    t = np.eye(k)
    cur = _varimax_criterion(b)
    criteria = [cur]
    sweep = 0
    while sweep < max_sweeps:
        prev = cur
        for j in range(k - 1):
            for l in range(j + 1, k):
                x = b[:, j].copy()
                y = b[:, l].copy()
                u = x * x - y * y
                w = 2.0 * x * y
                su, sv = u.sum(), w.sum()
                num = 2.0 * float(u @ w) - 2.0 * su * sv / p
                den = float(u @ u - w @ w) - (su * su - sv * sv) / p
                phi = math.atan2(num, den) / 4.0
                if phi == 0.0:
                    continue
                c, s = math.cos(phi), math.sin(phi)
                b[:, j] = x * c + y * s
                b[:, l] = -x * s + y * c
                tx = t[:, j].copy()
                ty = t[:, l].copy()
                t[:, j] = tx * c + ty * s
                t[:, l] = -tx * s + ty * c
        sweep += 1
        cur = _varimax_criterion(b)
        criteria.append(cur)
        if cur - prev < tol:
            break
    return b, t, sweep, criteria

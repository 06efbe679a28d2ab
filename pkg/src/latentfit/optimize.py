"""Quasi-Newton minimisation with finite-difference derivatives.

The objective may return ``inf`` for infeasible points (e.g. a model
covariance that is not positive definite); the line search halves the
step until it lands on a feasible point with sufficient decrease.
"""
from dataclasses import dataclass

import numpy as np

GRAD_REL_STEP = 1e-6
HESS_REL_STEP = 1e-4
GRAD_TOL = 1e-6
FTOL = 1e-10
MAX_ITER = 10000
MAX_HALVINGS = 60
ARMIJO = 1e-4


def num_grad(f, x, rel_step=GRAD_REL_STEP):
    """Central-difference gradient with steps ``rel_step * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (xp[i] - xm[i])
    return g


def num_hessian(f, x, rel_step=HESS_REL_STEP):
    """Central second differences; symmetric by construction."""
    x = np.asarray(x, dtype=np.float64)
    k = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    hess = np.empty((k, k))

    def at(i, si, j=None, sj=0.0):
        y = x.copy()
        y[i] += si * h[i]
        if j is not None:
            y[j] += sj * h[j]
        return f(y)

    for i in range(k):
        hess[i, i] = (at(i, 1.0) - 2.0 * f0 + at(i, -1.0)) / h[i] ** 2
        for j in range(i):
            v = (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0)
                 - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    return hess


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str

    @property
    def grad_max(self):
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def bfgs(f, x0, grad_tol=GRAD_TOL, ftol=FTOL, max_iter=MAX_ITER):
    """Minimise ``f`` by BFGS with an inverse-Hessian update and step halving.

    Converged means ``max|grad| < grad_tol`` and the last accepted step
    changed ``f`` by at most ``ftol * max(1, |f|)``.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    fx = f(x)
    if not np.isfinite(fx):
        raise ValueError("objective is not finite at the starting point")
    k = x.size
    if k == 0:
        return OptimizeResult(x, fx, np.zeros(0), True, 0, "no free parameters")
    g = num_grad(f, x)
    h_inv = np.eye(k) / max(1.0, float(np.max(np.abs(g))))
    fresh = True
    df = np.inf
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) < grad_tol and df <= ftol * max(1.0, abs(fx)):
            return OptimizeResult(x, fx, g, True, it, "converged")
        it += 1
        d = -h_inv @ g
        slope = float(g @ d)
        if not slope < 0:
            h_inv = np.eye(k) / max(1.0, float(np.max(np.abs(g))))
            fresh = True
            d = -h_inv @ g
            slope = float(g @ d)
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            x_new = x + t * d
            f_new = f(x_new)
            if np.isfinite(f_new) and f_new <= fx + ARMIJO * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if not fresh:
                h_inv = np.eye(k) / max(1.0, float(np.max(np.abs(g))))
                fresh = True
                continue
            ok = np.max(np.abs(g)) < grad_tol
            return OptimizeResult(x, fx, g, ok, it, "line search found no decrease")
        g_new = num_grad(f, x_new)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.sqrt(float(s @ s) * float(y @ y)):
            if fresh:
                h_inv = np.eye(k) * (sy / float(y @ y))
            rho = 1.0 / sy
            hy = h_inv @ y
            h_inv = (h_inv - rho * (np.outer(s, hy) + np.outer(hy, s))
                     + (rho * rho * float(y @ hy) + rho) * np.outer(s, s))
            fresh = False
        df = abs(fx - f_new)
        x, fx, g = x_new, f_new, g_new
    return OptimizeResult(x, fx, g, False, it, f"iteration cap {max_iter} reached")

"""Exploratory factor analysis: factor-count criteria, principal-component
extraction, Kaiser-normalised varimax, assignment of items to factors."""
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .linalg import eigen_sym, sym_matrix

# slack on the cumulative-variance criterion, so 0.7475 counts as 75%
VARIANCE_SLACK = 0.005
VARIMAX_TOL = 1e-10
VARIMAX_MAX_SWEEPS = 1000
AMBIGUITY_GAP = 0.05
COMMUNALITY_FLOOR = 0.3


def _names(names, p, prefix="V"):
    return tuple(names) if names is not None else tuple(f"{prefix}{i + 1}" for i in range(p))


@dataclass(frozen=True)
class FactorCountReport:
    eigenvalues: np.ndarray
    kaiser_count: int
    cumulative_proportion: np.ndarray

    def count_for_threshold(self, tau, slack=VARIANCE_SLACK):
        """Smallest k whose cumulative proportion reaches ``tau - slack``."""
        hits = np.nonzero(self.cumulative_proportion >= tau - slack)[0]
        return int(hits[0]) + 1 if hits.size else len(self.eigenvalues)

    @property
    def scree_series(self):
        return [(i + 1, float(v)) for i, v in enumerate(self.eigenvalues)]


def factor_count(r):
    values = eigen_sym(r, "R").values
    cum = np.cumsum(values) / values.sum()
    cum[-1] = 1.0
    return FactorCountReport(
        eigenvalues=values,
        kaiser_count=int(np.sum(values > 1.0)),
        cumulative_proportion=cum,
    )


@dataclass(frozen=True)
class LoadingMatrix:
    loadings: np.ndarray
    names: tuple
    rmsr: float
    rotation: str = "none"
    rotation_matrix: np.ndarray = field(default=None, repr=False)

    @property
    def k(self):
        return self.loadings.shape[1]

    @property
    def h2(self):
        return np.sum(self.loadings ** 2, axis=1)

    @property
    def u2(self):
        return 1.0 - self.h2

    @property
    def ss_loadings(self):
        return np.sum(self.loadings ** 2, axis=0)

    @property
    def proportion_var(self):
        return self.ss_loadings / self.loadings.shape[0]

    @property
    def cumulative_var(self):
        return np.cumsum(self.proportion_var)

    @property
    def proportion_explained(self):
        return self.ss_loadings / self.ss_loadings.sum()


def residual_rmsr(r, loadings):
    """Root mean square of the off-diagonal residuals R - L L'."""
    resid = np.asarray(r) - loadings @ loadings.T
    iu = np.triu_indices(resid.shape[0], 1)
    return float(np.sqrt(np.mean(resid[iu] ** 2))) if iu[0].size else 0.0


def extract_pc(r, k, names=None):
    """Principal-component loadings: eigenvector columns scaled by sqrt(eigenvalue)."""
    r = sym_matrix(r)
    p = r.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"k must be in [1, {p}], got {k}")
    eig = eigen_sym(r, "R")
    vals = np.clip(eig.values[:k], 0.0, None)
    lam = eig.vectors[:, :k] * np.sqrt(vals)
    signs = np.where(lam.sum(axis=0) < 0, -1.0, 1.0)
    lam = lam * signs
    return LoadingMatrix(loadings=lam, names=_names(names, p), rmsr=residual_rmsr(r, lam))


def rotate_varimax(lm):
    """Varimax with Kaiser row normalisation, by pairwise planar rotations.

    Output columns are ordered by descending sum of squared loadings and
    signed so each column sum is non-negative.
    """
    if lm.rotation != "none":
        raise ValueError("rotate_varimax expects an unrotated loading matrix")
    if lm.k < 2:
        raise ValueError("varimax needs at least two factors")
    a = np.asarray(lm.loadings, dtype=np.float64)
    h = np.sqrt(np.sum(a ** 2, axis=1))
    # near-zero communality rows are left unnormalised
    scale = np.where(h ** 2 < 1e-12, 1.0, h)
    _, t, _, _ = kernels.varimax_planar(np.ascontiguousarray(a / scale[:, None]),
                                        VARIMAX_TOL, VARIMAX_MAX_SWEEPS)
    rotated = a @ t
    order = np.argsort(-np.sum(rotated ** 2, axis=0), kind="stable")
    t = t[:, order]
    signs = np.where((a @ t).sum(axis=0) < 0, -1.0, 1.0)
    t = t * signs
    return replace(lm, loadings=a @ t, rotation="varimax", rotation_matrix=t)


def varimax_criterion(loadings):
    b2 = np.asarray(loadings) ** 2
    p = b2.shape[0]
    return float(np.sum(p * np.sum(b2 ** 2, axis=0) - np.sum(b2, axis=0) ** 2)) / p ** 2


@dataclass(frozen=True)
class FactorAssignment:
    names: tuple
    factor: np.ndarray
    loading: np.ndarray
    ambiguous: np.ndarray

    def members(self, j):
        return [nm for nm, f in zip(self.names, self.factor) if f == j]

    def groups(self):
        return {j: self.members(j) for j in sorted(set(int(f) for f in self.factor))}


def assign_factors(lm, gap=AMBIGUITY_GAP):
    """Assign each variable to the factor where its absolute loading is largest.

    Factors are 0-based. Rows whose top two absolute loadings differ by less
    than ``gap`` are flagged ambiguous.
    """
    a = np.abs(lm.loadings)
    idx = np.argmax(a, axis=1)
    rows = np.arange(a.shape[0])
    if lm.k > 1:
        top2 = np.sort(a, axis=1)[:, -2:]
        ambiguous = (top2[:, 1] - top2[:, 0]) < gap
    else:
        ambiguous = np.zeros(a.shape[0], dtype=bool)
    return FactorAssignment(lm.names, idx, lm.loadings[rows, idx], ambiguous)


def communality_screen(lm, floor=COMMUNALITY_FLOOR):
    """Variables whose communality does not exceed ``floor``."""
    return [nm for nm, h in zip(lm.names, lm.h2) if h <= floor]

"""Sampling adequacy: Bartlett's sphericity test and the Kaiser-Meyer-Olkin measure."""
from dataclasses import dataclass

import numpy as np

from .linalg import inverse, log_det, sym_matrix
from .stats import chi2_sf

# lower edges, closed on the left
KMO_BANDS = (
    (0.90, "marvelous"),
    (0.80, "meritorious"),
    (0.70, "middling"),
    (0.60, "mediocre"),
    (0.50, "miserable"),
    (float("-inf"), "unacceptable"),
)
# items below this MSA are candidates for removal
MSA_FLOOR = 0.5


@dataclass(frozen=True)
class BartlettResult:
    chisq: float
    df: int
    p_value: float
    n: int


@dataclass(frozen=True)
class KmoResult:
    overall: float
    per_item: np.ndarray
    label: str

    def weak_items(self, names, floor=MSA_FLOOR):
        return [nm for nm, v in zip(names, self.per_item) if v < floor]


def bartlett(r, n):
    """Test H0: the population correlation matrix is the identity."""
    r = sym_matrix(r)
    p = r.shape[0]
    if not np.allclose(np.diag(r), 1.0, atol=1e-10):
        raise ValueError("bartlett expects a correlation matrix (unit diagonal)")
    if n <= p:
        raise ValueError(f"need n > p, got n={n}, p={p}")
    chisq = -(n - 1 - (2 * p + 5) / 6.0) * log_det(r, "R")
    chisq = max(chisq, 0.0)
    df = p * (p - 1) // 2
    return BartlettResult(chisq=chisq, df=df, p_value=chi2_sf(chisq, df), n=n)


def kmo_label(value):
    for edge, label in KMO_BANDS:
        if value >= edge:
            return label


def kmo(r):
    """Overall and per-item measure of sampling adequacy (anti-image method)."""
    r = sym_matrix(r)
    q = np.asarray(inverse(r, "R"))
    d = np.sqrt(np.diag(q))
    partial = -q / np.outer(d, d)
    r2 = np.asarray(r) ** 2
    q2 = partial ** 2
    np.fill_diagonal(r2, 0.0)
    np.fill_diagonal(q2, 0.0)
    per_item = r2.sum(axis=0) / (r2.sum(axis=0) + q2.sum(axis=0))
    overall = float(r2.sum() / (r2.sum() + q2.sum()))
    return KmoResult(overall=overall, per_item=per_item, label=kmo_label(overall))

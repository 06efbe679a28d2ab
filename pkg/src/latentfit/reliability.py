"""Internal consistency and construct validity: Cronbach's alpha with
drop-one analysis, construct reliability (CR), average variance extracted
(AVE), and the discriminant-validity matrix."""
from dataclasses import dataclass

import numpy as np

from .linalg import inverse, sym_matrix

ALPHA_BANDS = (
    (0.90, "excellent"),
    (0.80, "good"),
    (0.70, "acceptable"),
    (0.60, "questionable"),
    (0.50, "poor"),
    (float("-inf"), "unacceptable"),
)
AVE_FLOOR = 0.5


def alpha_label(value):
    for edge, label in ALPHA_BANDS:
        if value >= edge:
            return label


def _pearson(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    return float(xc @ yc / np.sqrt((xc @ xc) * (yc @ yc)))


def _raw_alpha(x):
    m = x.shape[1]
    item_var = x.var(axis=0, ddof=1).sum()
    total_var = x.sum(axis=1).var(ddof=1)
    return m / (m - 1.0) * (1.0 - item_var / total_var)


@dataclass(frozen=True)
class ItemStats:
    name: str
    alpha_if_dropped: float  # None when only one item would remain
    raw_r: float
    r_drop: float
    mean: float
    sd: float


@dataclass(frozen=True)
class AlphaReport:
    raw_alpha: float
    std_alpha: float
    average_r: float
    mean: float
    sd: float
    items: tuple
    label: str

    def to_dict(self):
        return {
            "raw_alpha": self.raw_alpha,
            "std_alpha": self.std_alpha,
            "average_r": self.average_r,
            "mean": self.mean,
            "sd": self.sd,
            "label": self.label,
            "items": [
                {"name": it.name, "alpha_if_dropped": it.alpha_if_dropped,
                 "raw_r": it.raw_r, "r_drop": it.r_drop, "mean": it.mean, "sd": it.sd}
                for it in self.items
            ],
        }


def cronbach_alpha(d, items=None):
    """Cronbach's alpha for the columns ``items`` of dataset ``d``."""
    items = list(d.names) if items is None else list(items)
    if len(items) < 2:
        raise ValueError("alpha needs at least two items")
    sub = d.select(items)
    if sub.has_missing:
        raise ValueError("alpha requires complete data")
    x = sub.rows
    sds = x.std(axis=0, ddof=1)
    for name, s in zip(items, sds):
        if s == 0:
            raise ValueError(f"item {name!r} has zero variance")
    m = len(items)
    z = (x - x.mean(axis=0)) / sds
    r = (z.T @ z) / (x.shape[0] - 1)
    rbar = float((r.sum() - m) / (m * (m - 1)))
    total = x.sum(axis=1)
    stats = []
    for j, name in enumerate(items):
        rest = np.delete(x, j, axis=1)
        stats.append(ItemStats(
            name=name,
            alpha_if_dropped=float(_raw_alpha(rest)) if m > 2 else None,
            raw_r=_pearson(x[:, j], total),
            r_drop=_pearson(x[:, j], total - x[:, j]),
            mean=float(x[:, j].mean()),
            sd=float(sds[j]),
        ))
    raw = float(_raw_alpha(x))
    score = x.mean(axis=1)
    return AlphaReport(
        raw_alpha=raw,
        std_alpha=m * rbar / (1.0 + (m - 1) * rbar),
        average_r=rbar,
        mean=float(score.mean()),
        sd=float(score.std(ddof=1)),
        items=tuple(stats),
        label=alpha_label(raw),
    )


def drop_one_screen(rep):
    """Items whose removal would raise alpha."""
    if any(it.alpha_if_dropped is None for it in rep.items):
        raise ValueError("drop-one analysis needs at least three items")
    return [it.name for it in rep.items if it.alpha_if_dropped > rep.raw_alpha]


@dataclass(frozen=True)
class ConstructValidity:
    cr: np.ndarray
    ave: np.ndarray

    @property
    def convergent_ok(self):
        return (self.cr > self.ave) & (self.ave > AVE_FLOOR)


def cr_ave(lm, assign):
    """CR and AVE per factor from each member variable's winning loading."""
    cr, ave = [], []
    for j in range(lm.k):
        lam = np.asarray(assign.loading)[np.asarray(assign.factor) == j]
        if lam.size == 0:
            raise ValueError(f"factor {j + 1} has no assigned variables")
        e2 = np.sum(1.0 - lam ** 2)
        s = lam.sum() ** 2
        s2 = np.sum(lam ** 2)
        cr.append(s / (s + e2))
        ave.append(s2 / (s2 + e2))
    return ConstructValidity(np.array(cr), np.array(ave))


@dataclass(frozen=True)
class DiscriminantMatrix:
    matrix: np.ndarray

    @property
    def verdicts(self):
        m = np.abs(self.matrix.copy())
        diag = np.diag(self.matrix).copy()
        np.fill_diagonal(m, -np.inf)
        return diag > m.max(axis=1)


def discriminant_from_correlations(factor_corr, ave):
    """Overwrite the diagonal of a factor-correlation block with sqrt(AVE)."""
    c = np.array(factor_corr, dtype=np.float64, copy=True)
    if c.shape[0] < 2:
        raise ValueError("discriminant validity needs at least two factors")
    off = c - np.diag(np.diag(c))
    if np.max(np.abs(off - off.T)) > 1e-12:
        raise ValueError("factor correlation block is not symmetric")
    np.fill_diagonal(c, np.sqrt(np.asarray(ave, dtype=np.float64)))
    return DiscriminantMatrix(c)


def factor_score_correlations(r, loadings):
    """Correlations of regression-method factor scores: W = R^-1 L, C = W' R W."""
    r = sym_matrix(r)
    w = np.asarray(inverse(r, "R")) @ loadings
    c = w.T @ np.asarray(r) @ w
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    return (c + c.T) / 2.0


def discriminant(r, lm, cv):
    return discriminant_from_correlations(factor_score_correlations(r, lm.loadings), cv.ave)

"""Maximum-likelihood fitting of RAM-parameterised latent-variable models.

With A the directed-path matrix, P the two-headed (co)variance matrix and
F the selector of observed rows (observed variables come first)::

    Sigma = F (I - A)^-1 P (I - A)^-T F'
    mu    = F (I - A)^-1 m
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import optimize
from ._backend import kernels
from .linalg import NotPositiveDefiniteError, inverse, log_det, sym_matrix
from .model import CONSTANT, COVARIANCE, DIRECTED, INTERCEPT, PathSpec, SemModel
from .stats import chi2_sf, normal_two_sided_p

BORDERLINE_BAND = 0.005
START_LOADING = 1.0
START_LATENT_VARIANCE = 0.5


class SemError(ValueError):
    pass


class RamLayout:
    """Index arrays mapping the free-parameter vector into A, P and m."""

    def __init__(self, model):
        self.model = model
        self.names = tuple(model.observed) + tuple(model.latents)
        self.p = len(model.observed)
        self.m = len(self.names)
        pos = {nm: i for i, nm in enumerate(self.names)}
        self.a0 = np.zeros((self.m, self.m))
        self.p0 = np.zeros((self.m, self.m))
        self.mean0 = np.zeros(self.m)
        a_idx, p_idx, m_idx = [], [], []
        free_index = {ps.label: i for i, ps in enumerate(model.free_params)}
        for ps in model.params:
            h = pos[ps.head]
            if ps.kind == DIRECTED:
                t = pos[ps.tail]
                if ps.free:
                    a_idx.append((h, t, free_index[ps.label]))
                else:
                    self.a0[h, t] = ps.fixed_value
            elif ps.kind == COVARIANCE:
                t = pos[ps.tail]
                if ps.free:
                    p_idx.append((h, t, free_index[ps.label]))
                else:
                    self.p0[h, t] = self.p0[t, h] = ps.fixed_value
            else:
                if ps.free:
                    m_idx.append((h, free_index[ps.label]))
                else:
                    self.mean0[h] = ps.fixed_value
        self.a_rows, self.a_cols, self.a_theta = (np.array(v, dtype=int) for v in zip(*a_idx)) if a_idx else (np.zeros(0, int),) * 3
        self.p_rows, self.p_cols, self.p_theta = (np.array(v, dtype=int) for v in zip(*p_idx)) if p_idx else (np.zeros(0, int),) * 3
        self.m_rows, self.m_theta = (np.array(v, dtype=int) for v in zip(*m_idx)) if m_idx else (np.zeros(0, int),) * 2
        self.eye = np.eye(self.m)

    def matrices(self, theta):
        a = self.a0.copy()
        a[self.a_rows, self.a_cols] = theta[self.a_theta]
        pm = self.p0.copy()
        pm[self.p_rows, self.p_cols] = theta[self.p_theta]
        pm[self.p_cols, self.p_rows] = theta[self.p_theta]
        mv = self.mean0.copy()
        mv[self.m_rows] = theta[self.m_theta]
        return a, pm, mv

    def implied(self, theta):
        a, pm, mv = self.matrices(np.asarray(theta, dtype=np.float64))
        try:
            b = np.linalg.solve(self.eye - a, self.eye)
        except np.linalg.LinAlgError:
            raise SemError("I - A is singular: cyclic paths with unit gain at these values") from None
        bf = b[: self.p]
        sigma = bf @ pm @ bf.T
        sigma = (sigma + sigma.T) / 2.0
        mu = bf @ mv if self.model.meanstructure else None
        return sigma, mu


def implied_moments(m, theta):
    """Model-implied covariance (and mean vector when the model has one)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (m.n_free,):
        raise SemError(f"theta has length {theta.size}, model has {m.n_free} free parameters")
    return RamLayout(m).implied(theta)


class Discrepancy:
    """F_ML(theta) = ln|Sigma| + tr(S Sigma^-1) - ln|S| - p  [+ (xbar-mu)' Sigma^-1 (xbar-mu)].

    Returns ``inf`` where Sigma is not positive definite.
    """

    def __init__(self, layout, s, means=None):
        self.layout = layout
        self.s = np.ascontiguousarray(s)
        self.means = None if means is None else np.asarray(means, dtype=np.float64)
        self.logdet_s = log_det(s, "S")
        self.p = s.shape[0]
        self.evaluations = 0

    def __call__(self, theta):
        self.evaluations += 1
        try:
            sigma, mu = self.layout.implied(theta)
        except SemError:
            return math.inf
        chol, pivot = kernels.cholesky(np.ascontiguousarray(sigma))
        if pivot >= 0:
            return math.inf
        sinv = kernels.cholesky_inverse(chol)
        f = kernels.cholesky_logdet(chol) + float(np.sum(self.s * sinv)) - self.logdet_s - self.p
        if mu is not None and self.means is not None:
            d = self.means - mu
            f += float(d @ sinv @ d)
        return f


def _role(ps, model):
    latents = set(model.latents)
    if ps.kind == DIRECTED:
        if ps.tail in latents and ps.head not in latents:
            return "=~", ps.tail, ps.head
        return "~", ps.head, ps.tail
    if ps.kind == COVARIANCE:
        return "~~", ps.tail, ps.head
    return "~1", ps.head, ""


def start_values(m, s, means=None):
    """Loadings 1, variances half the observed variance (latents 0.5),
    covariances and regressions 0, intercepts at the sample means."""
    obs = {nm: i for i, nm in enumerate(m.observed)}
    out = []
    for ps in m.free_params:
        if ps.start_value is not None:
            out.append(ps.start_value)
            continue
        op, _, _ = _role(ps, m)
        if op == "=~":
            out.append(START_LOADING)
        elif op == "~":
            out.append(0.0)
        elif op == "~~":
            if ps.tail != ps.head:
                out.append(0.0)
            elif ps.tail in obs:
                out.append(s[obs[ps.tail], obs[ps.tail]] / 2.0)
            else:
                out.append(START_LATENT_VARIANCE)
        else:
            out.append(0.0 if means is None else float(means[obs[ps.head]]))
    return np.array(out, dtype=np.float64)


@dataclass(frozen=True)
class ParamRow:
    label: str
    lhs: str
    op: str
    rhs: str
    estimate: float
    std_err: float = None
    z: float = None
    p: float = None
    fixed: bool = False

    @classmethod
    def tested(cls, label, lhs, op, rhs, estimate, std_err):
        """Row with z and two-sided p derived from estimate and standard error."""
        z = estimate / std_err
        return cls(label, lhs, op, rhs, estimate, std_err, z, normal_two_sided_p(z))

    def arrow(self):
        if self.op == "=~":
            return f"{self.rhs} <--- {self.lhs}"
        if self.op == "~":
            return f"{self.lhs} <--- {self.rhs}"
        if self.op == "~~":
            return f"{self.lhs} <--> {self.rhs}"
        return f"{self.lhs} <--- 1"


@dataclass(frozen=True)
class ParamTable:
    rows: tuple

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def by_label(self, label):
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def free_rows(self):
        return [r for r in self.rows if not r.fixed]

    def to_list(self):
        return [
            {"label": r.label, "lhs": r.lhs, "op": r.op, "rhs": r.rhs, "estimate": r.estimate,
             "std_err": r.std_err, "z": r.z, "p": r.p, "fixed": r.fixed}
            for r in self.rows
        ]

    def to_text(self):
        """Aligned table: label, estimate, SE, z, p, path."""
        out = [f"{'':<14}{'Estimate':>14}{'Std Error':>14}{'z value':>14}{'Pr(>|z|)':>16}"]
        for r in self.rows:
            if r.fixed:
                out.append(f"{'(fixed)':<14}{r.estimate:>14.6f}{'':>14}{'':>14}{'':>16}  {r.arrow()}")
                continue
            se = "NA" if r.std_err is None or not np.isfinite(r.std_err) else f"{r.std_err:.6f}"
            z = "NA" if r.z is None or not np.isfinite(r.z) else f"{r.z:.6f}"
            p = "NA" if r.p is None or not np.isfinite(r.p) else f"{r.p:.7e}"
            out.append(f"{r.label:<14}{r.estimate:>14.6f}{se:>14}{z:>14}{p:>16}  {r.arrow()}")
        return "\n".join(out)


@dataclass
class SemFit:
    model: SemModel
    n: int
    sample_cov: np.ndarray
    sample_means: np.ndarray
    theta: np.ndarray
    implied_cov: np.ndarray
    implied_means: np.ndarray
    discrepancy: float
    chisq: float
    df: int
    converged: bool
    iterations: int
    grad_max: float
    message: str
    std_err: np.ndarray = None
    param_table: ParamTable = None
    diagnostics: list = field(default_factory=list)

    @property
    def p_value(self):
        return chi2_sf(self.chisq, self.df) if self.df > 0 else None

    @property
    def multiplier(self):
        return self.n if self.model.meanstructure else self.n - 1

    def srmr(self):
        """Standardised root mean square residual over the covariance moments."""
        s, sig = self.sample_cov, self.implied_cov
        d = np.sqrt(np.diag(s))
        resid = (s - sig) / np.outer(d, d)
        il = np.tril_indices(s.shape[0])
        return float(np.sqrt(np.mean(resid[il] ** 2)))


def _align(s, names, observed, means=None):
    if names is None:
        if s.shape[0] != len(observed):
            raise SemError(f"covariance is {s.shape[0]}x{s.shape[0]}, model has {len(observed)} observed variables")
        return s, means
    names = list(names)
    missing = [nm for nm in observed if nm not in names]
    if missing:
        raise SemError(f"observed variables missing from the data: {missing}")
    idx = [names.index(nm) for nm in observed]
    s = s[np.ix_(idx, idx)]
    return s, (None if means is None else np.asarray(means)[idx])


def fit_ml(m, s, n, means=None, names=None, start=None, compute_se=True):
    """Maximum-likelihood fit of ``m`` to covariance ``s`` from ``n`` cases.

    ``names`` labels the rows of ``s`` (and ``means``) so they can be
    matched to the model's observed variables; extra variables are dropped.
    The chi-square multiplier is n with a mean structure, n - 1 without.
    """
    s = np.asarray(sym_matrix(s))
    s, means = _align(s, names, m.observed, means)
    p = s.shape[0]
    if n <= p:
        raise SemError(f"need n > p, got n={n}, p={p}")
    if m.meanstructure and means is None:
        raise SemError("model has a mean structure but no sample means were given")
    try:
        log_det(s, "S")
    except NotPositiveDefiniteError as exc:
        raise SemError(str(exc)) from None

    layout = RamLayout(m)
    f = Discrepancy(layout, s, means if m.meanstructure else None)
    theta0 = start_values(m, s, means) if start is None else np.asarray(start, dtype=np.float64)
    if not np.isfinite(f(theta0)):
        raise SemError("implied covariance is not positive definite at the start values")
    res = optimize.bfgs(f, theta0)
    mult = n if m.meanstructure else n - 1
    sigma, mu = layout.implied(res.x)
    fval = max(res.fun, 0.0)
    fit = SemFit(
        model=m, n=n, sample_cov=s, sample_means=means, theta=res.x, implied_cov=sigma,
        implied_means=mu, discrepancy=fval, chisq=mult * fval, df=m.df,
        converged=res.converged, iterations=res.iterations, grad_max=res.grad_max,
        message=res.message,
    )
    if not res.converged:
        fit.diagnostics.append(f"optimizer stopped without converging: {res.message}")
    se = np.full(m.n_free, np.nan)
    if compute_se and m.n_free:
        hess = optimize.num_hessian(lambda th: 0.5 * mult * f(th), res.x)
        hess = (hess + hess.T) / 2.0
        try:
            se = np.sqrt(np.diag(np.asarray(inverse(hess, "Hessian"))))
        except NotPositiveDefiniteError:
            cov = np.linalg.pinv(hess)
            dg = np.diag(cov)
            se = np.where(dg > 0, np.sqrt(np.abs(dg)), np.nan)
            fit.diagnostics.append("information matrix not positive definite; some standard errors unavailable")
    fit.std_err = se
    fit.param_table = _param_table(m, res.x, se)
    return fit


def _param_table(m, theta, se):
    rows = []
    free_pos = {ps.label: i for i, ps in enumerate(m.free_params)}
    for ps in m.params:
        op, lhs, rhs = _role(ps, m)
        if ps.free:
            i = free_pos[ps.label]
            est, err = float(theta[i]), float(se[i])
            if np.isfinite(err) and err > 0:
                rows.append(ParamRow.tested(ps.label, lhs, op, rhs, est, err))
            else:
                rows.append(ParamRow(ps.label, lhs, op, rhs, est, None, None, None))
        else:
            rows.append(ParamRow(None, lhs, op, rhs, float(ps.fixed_value), fixed=True))
    return ParamTable(tuple(rows))


def baseline_model(m):
    """Independence model over the same observed variables."""
    params = [PathSpec(COVARIANCE, nm, nm, label=f"V_{nm}") for nm in m.observed]
    if m.meanstructure:
        params += [PathSpec(INTERCEPT, CONSTANT, nm, label=f"M_{nm}") for nm in m.observed]
    return SemModel(tuple(m.observed), (), tuple(params), m.meanstructure)


@dataclass(frozen=True)
class PathVerdict:
    label: str
    source: str
    target: str
    estimate: float
    z: float
    p: float
    significant: bool
    borderline: bool

    def describe(self, alpha):
        verdict = "significant" if self.significant else "not significant"
        text = f"{self.source} -> {self.target}: {verdict} (estimate {self.estimate:.4f}, z {self.z:.3f}, p {self.p:.4g})"
        if self.borderline:
            text += f" [borderline: |p - {alpha:g}| < {BORDERLINE_BAND:g}]"
        return text


def path_tests(pt, alpha=0.05):
    """Significance of every free regression path, by strict p < alpha."""
    out = []
    for r in pt.rows:
        if r.op != "~" or r.fixed:
            continue
        if r.p is None:
            out.append(PathVerdict(r.label, r.rhs, r.lhs, r.estimate, math.nan, math.nan, False, False))
            continue
        out.append(PathVerdict(
            label=r.label, source=r.rhs, target=r.lhs, estimate=r.estimate, z=r.z, p=r.p,
            significant=r.p < alpha, borderline=abs(r.p - alpha) < BORDERLINE_BAND,
        ))
    return out


def format_path_tests(verdicts, alpha=0.05):
    return "\n".join(v.describe(alpha) for v in verdicts)


def simulate(m, theta, n, rng):
    """Draw ``n`` multivariate-normal cases from the moments implied by ``theta``.

    Returns a :class:`~latentfit.data.Dataset` over the observed variables;
    means are zero unless the model has a mean structure.
    """
    from .data import Dataset

    sigma, mu = implied_moments(m, theta)
    if mu is None:
        mu = np.zeros(len(m.observed))
    rows = rng.multivariate_normal(mu, sigma, size=n, method="cholesky")
    return Dataset.from_array(rows, names=m.observed)


def population_theta(m, s=None):
    """Parameter vector from the model's start values; unset entries fall back
    to the generic start rules (which need a covariance ``s``)."""
    if s is None:
        s = np.eye(len(m.observed))
    return start_values(m, s)

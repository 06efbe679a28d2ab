"""Survey data ingestion: CSV loading, descriptive summaries, missing-value
handling, and correlation/covariance matrices."""
import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .linalg import sym_matrix

DEFAULT_NA_TOKENS = ("", "NA", "N/A", "NaN", "nan", ".")
MAX_IMPUTE_FRACTION = 0.20


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    names: tuple
    rows: np.ndarray
    missing_mask: np.ndarray
    declared_scale: tuple = None

    def __post_init__(self):
        n, p = self.rows.shape
        if n < 2 or p < 2:
            raise DataError(f"dataset needs at least 2 rows and 2 columns, got {n}x{p}")
        if len(self.names) != p:
            raise DataError("column names do not match data width")
        if not np.all(np.isfinite(self.rows[~self.missing_mask])):
            raise DataError("non-missing cells must be finite")

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def p(self):
        return self.rows.shape[1]

    @property
    def has_missing(self):
        return bool(self.missing_mask.any())

    def column(self, name):
        return self.rows[:, self.names.index(name)]

    def select(self, names):
        idx = [self.names.index(nm) for nm in names]
        return replace(self, names=tuple(names), rows=self.rows[:, idx],
                       missing_mask=self.missing_mask[:, idx])

    @classmethod
    def from_array(cls, rows, names=None, missing_mask=None, declared_scale=None):
        rows = np.asarray(rows, dtype=np.float64)
        if missing_mask is None:
            missing_mask = np.isnan(rows)
        if names is None:
            names = tuple(f"V{j + 1}" for j in range(rows.shape[1]))
        rows = np.where(missing_mask, np.nan, rows)
        return cls(tuple(names), rows, np.asarray(missing_mask, dtype=bool), declared_scale)


def load_csv(path, delimiter=",", has_header=True, na_tokens=DEFAULT_NA_TOKENS, scale_bounds=None):
    """Read a numeric CSV file into a :class:`Dataset`.

    Cells equal to one of ``na_tokens`` (after stripping) are missing.
    ``scale_bounds=(lo, hi)`` rejects any non-missing value outside it.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return parse_csv(text, delimiter=delimiter, has_header=has_header,
                     na_tokens=na_tokens, scale_bounds=scale_bounds)


def parse_csv(text, delimiter=",", has_header=True, na_tokens=DEFAULT_NA_TOKENS, scale_bounds=None):
    records = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if r]
    if not records:
        raise DataError("empty input")
    if has_header:
        names, records = tuple(h.strip() for h in records[0]), records[1:]
    else:
        names = tuple(f"V{j + 1}" for j in range(len(records[0])))
    if not records:
        raise DataError("no data rows")
    width = len(names)
    na = set(na_tokens)
    values = np.empty((len(records), width))
    mask = np.zeros((len(records), width), dtype=bool)
    first_data_line = 2 if has_header else 1
    for i, rec in enumerate(records):
        if len(rec) != width:
            raise DataError(f"row {i + first_data_line}: expected {width} fields, found {len(rec)}")
        for j, cell in enumerate(rec):
            cell = cell.strip()
            if cell in na:
                mask[i, j] = True
                values[i, j] = np.nan
                continue
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"row {i + first_data_line}, column {names[j]!r}: non-numeric value {cell!r}"
                ) from None
            if not np.isfinite(values[i, j]):
                raise DataError(f"row {i + first_data_line}, column {names[j]!r}: non-finite value")
    if scale_bounds is not None:
        lo, hi = scale_bounds
        bad = ~mask & ((values < lo) | (values > hi))
        if bad.any():
            cells = ", ".join(
                f"(row {i + first_data_line}, {names[j]}={values[i, j]:g})"
                for i, j in zip(*np.nonzero(bad))
            )
            raise DataError(f"values outside scale [{lo}, {hi}]: {cells}")
    return Dataset(names, values, mask, tuple(scale_bounds) if scale_bounds else None)


@dataclass(frozen=True)
class VariableSummary:
    name: str
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    missing_count: int


def quantile7(x, q):
    """Linear-interpolation quantile (Hyndman-Fan type 7)."""
    xs = np.sort(np.asarray(x, dtype=np.float64))
    h = (len(xs) - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, len(xs) - 1)
    return float(xs[lo] + (h - lo) * (xs[hi] - xs[lo]))


def summarize(d):
    out = []
    for j, name in enumerate(d.names):
        col = d.rows[~d.missing_mask[:, j], j]
        if col.size == 0:
            raise DataError(f"column {name!r} has no observed values")
        out.append(VariableSummary(
            name=name,
            min=float(col.min()),
            q1=quantile7(col, 0.25),
            median=quantile7(col, 0.5),
            mean=float(col.mean()),
            q3=quantile7(col, 0.75),
            max=float(col.max()),
            missing_count=int(d.missing_mask[:, j].sum()),
        ))
    return out


def impute(d, strategy):
    """Fill or drop missing cells.

    ``mean``/``median`` replace a column's missing cells with that column's
    statistic, and refuse columns with more than 20% missing. ``listwise``
    drops every row that has a missing cell.
    """
    if strategy == "listwise":
        keep = ~d.missing_mask.any(axis=1)
        if keep.sum() < 2:
            raise DataError("listwise deletion leaves fewer than 2 rows")
        return replace(d, rows=d.rows[keep].copy(), missing_mask=np.zeros((int(keep.sum()), d.p), bool))
    if strategy not in ("mean", "median"):
        raise ValueError(f"unknown impute strategy {strategy!r}")
    rows = d.rows.copy()
    for j, name in enumerate(d.names):
        miss = d.missing_mask[:, j]
        frac = miss.mean()
        if frac > MAX_IMPUTE_FRACTION:
            raise DataError(
                f"column {name!r} is {frac:.1%} missing; imputation allowed up to "
                f"{MAX_IMPUTE_FRACTION:.0%}"
            )
        if miss.any():
            obs = rows[~miss, j]
            rows[miss, j] = obs.mean() if strategy == "mean" else np.median(obs)
    return replace(d, rows=rows, missing_mask=np.zeros_like(d.missing_mask))


def average_ranks(x):
    """Ranks 1..n with ties given the mean of the ranks they span."""
    x = np.asarray(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _complete(d, what):
    if d.has_missing:
        raise DataError(f"{what} requires complete data; impute or use listwise deletion first")


def correlation(d, method="pearson"):
    _complete(d, "correlation")
    x = d.rows
    if method == "spearman":
        x = np.column_stack([average_ranks(x[:, j]) for j in range(d.p)])
    elif method != "pearson":
        raise ValueError(f"unknown correlation method {method!r}")
    sd = x.std(axis=0)
    for j in np.nonzero(sd == 0)[0]:
        raise DataError(f"column {d.names[j]!r} is constant")
    z = (x - x.mean(axis=0)) / sd
    r = (z.T @ z) / d.n
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return sym_matrix(r)


def covariance(d):
    """Unbiased sample covariance (divisor n - 1)."""
    _complete(d, "covariance")
    if d.n < 2:
        raise DataError("covariance needs at least 2 rows")
    c = d.rows - d.rows.mean(axis=0)
    s = (c.T @ c) / (d.n - 1)
    return sym_matrix((s + s.T) / 2.0)


def read_matrix_csv(path):
    """Read a labelled square matrix (header row plus row labels)."""
    with open(path, newline="", encoding="utf-8") as fh:
        records = [r for r in csv.reader(fh) if r]
    if len(records) < 2:
        raise DataError(f"{path}: matrix file is empty")
    names = tuple(c.strip() for c in records[0][1:])
    body = records[1:]
    if len(body) != len(names):
        raise DataError(f"{path}: expected {len(names)} rows, found {len(body)}")
    m = np.empty((len(names), len(names)))
    for i, rec in enumerate(body):
        if rec[0].strip() != names[i]:
            raise DataError(f"{path}: row {i + 2} label {rec[0]!r} does not match column {names[i]!r}")
        if len(rec) != len(names) + 1:
            raise DataError(f"{path}: row {i + 2} has {len(rec) - 1} values, expected {len(names)}")
        try:
            m[i] = [float(c) for c in rec[1:]]
        except ValueError as exc:
            raise DataError(f"{path}: row {i + 2}: {exc}") from None
    return names, sym_matrix(m)


def write_matrix_csv(path, names, m, fmt="{:.10g}"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, np.asarray(m)):
            w.writerow([name] + [fmt.format(v) for v in row])

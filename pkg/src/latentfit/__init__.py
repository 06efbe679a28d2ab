"""Exploratory and confirmatory factor analysis, reliability, and
structural equation modelling for survey data."""
from ._backend import BACKEND
from .adequacy import bartlett, kmo
from .data import Dataset, correlation, covariance, impute, load_csv, summarize
from .efa import assign_factors, communality_screen, extract_pc, factor_count, rotate_varimax
from .fit import classify, compute_indices
from .linalg import eigen_sym, inverse, log_det
from .model import identify, load_model, parse_measurement, parse_ram
from .reliability import cr_ave, cronbach_alpha, discriminant
from .sem import baseline_model, fit_ml, implied_moments, path_tests

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Dataset", "assign_factors", "baseline_model", "bartlett", "classify",
    "communality_screen", "compute_indices", "correlation", "covariance", "cr_ave",
    "cronbach_alpha", "discriminant", "eigen_sym", "extract_pc", "factor_count", "fit_ml",
    "identify", "implied_moments", "impute", "inverse", "kmo", "load_csv", "load_model",
    "log_det", "parse_measurement", "parse_ram", "path_tests", "rotate_varimax", "summarize",
]

import csv
from pathlib import Path

import numpy as np
import pytest

from latentfit import _kernels_py, efa, linalg, sem
from latentfit._backend import BACKEND, kernels as default_kernels

DATA = Path(__file__).parent / "data"
ITEMS = tuple(f"Q{i}" for i in range(1, 22))

ACCEPTANCE_LINES = []

BACKENDS = {"python": _kernels_py}
if BACKEND == "cython":
    BACKENDS["cython"] = default_kernels


def _read_rows(name):
    with open(DATA / name, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="session")
def spearman21():
    rows = _read_rows("spearman21.csv")
    names = tuple(rows[0][1:])
    r = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return names, r


@pytest.fixture(scope="session")
def reference_eigen():
    rows = _read_rows("spearman21_eigen.csv")[1:]
    values = np.array([float(v) for v in rows[0][1:]])
    vectors = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return values, vectors


def _loading_table(name):
    rows = _read_rows(name)
    body = rows[1:]
    lam = np.array([[float(v) for v in row[1:5]] for row in body])
    h2 = np.array([float(row[5]) for row in body])
    return lam, h2


@pytest.fixture(scope="session")
def reference_unrotated():
    return _loading_table("pc4_unrotated.csv")


@pytest.fixture(scope="session")
def reference_varimax():
    return _loading_table("pc4_varimax.csv")


@pytest.fixture(scope="session")
def reference_msa():
    rows = _read_rows("kmo_msa.csv")[1:]
    return {row[0]: float(row[1]) for row in rows}


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available kernel implementation."""
    k = BACKENDS[request.param]
    for mod in (linalg, efa, sem):
        monkeypatch.setattr(mod, "kernels", k)
    return request.param


def align_signs(a, ref):
    """Flip columns of ``a`` to best match ``ref``."""
    s = np.sign(np.sum(a * ref, axis=0))
    s[s == 0] = 1.0
    return a * s


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

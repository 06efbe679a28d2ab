"""Time the compiled kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Also times one full ML fit of the 21-indicator structural model under each
backend, since that is where Cholesky is called tens of thousands of times.
"""
import argparse
import timeit
from pathlib import Path

import numpy as np

from latentfit import _kernels_py, sem
from latentfit._backend import BACKEND, kernels
from latentfit.model import load_model

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"


def _spd(p, seed=0):
    a = np.random.default_rng(seed).normal(size=(p, p))
    return np.ascontiguousarray(a @ a.T + p * np.eye(p))


def cases():
    r21 = _spd(21)
    load = np.ascontiguousarray(np.random.default_rng(1).normal(size=(21, 4)))
    return {
        "jacobi_eigen 21x21": lambda k: k.jacobi_eigen(r21, 1e-12 * 21 * np.linalg.norm(r21), 100),
        "cholesky 21x21": lambda k: k.cholesky(r21),
        "cholesky_inverse 21x21": lambda k: k.cholesky_inverse(k.cholesky(r21)[0]),
        "varimax_planar 21x4": lambda k: k.varimax_planar(load, 1e-10, 1000),
    }


def sem_fit(k):
    m = load_model(DATA / "structural.ram", "ram")
    rng = np.random.default_rng(3)
    theta = rng.uniform(0.3, 0.9, m.n_free)
    s = np.cov(sem.simulate(m, theta, 500, rng).rows, rowvar=False)
    saved = sem.kernels
    sem.kernels = k
    try:
        return sem.fit_ml(m, s, 500, compute_se=False)
    finally:
        sem.kernels = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if BACKEND == "cython":
        backends["cython"] = kernels
    else:
        print("compiled kernels not built; timing the numpy fallback only")
    names = list(backends)
    print(f"{'kernel':<26}" + "".join(f"{n + ' (ms)':>16}" for n in names) + f"{'speed-up':>10}")
    for label, fn in cases().items():
        t = [min(timeit.repeat(lambda: fn(backends[n]), number=1, repeat=args.repeat)) * 1e3 for n in names]
        ratio = f"{t[0] / t[-1]:10.1f}" if len(t) > 1 else ""
        print(f"{label:<26}" + "".join(f"{x:16.4f}" for x in t) + ratio)
    t = [min(timeit.repeat(lambda: sem_fit(backends[n]), number=1, repeat=3)) * 1e3 for n in names]
    ratio = f"{t[0] / t[-1]:10.1f}" if len(t) > 1 else ""
    print(f"{'fit_ml structural (48 par)':<26}" + "".join(f"{x:16.1f}" for x in t) + ratio)


if __name__ == "__main__":
    main()

import numpy as np
import pytest

from lqsopt.datagen import SyntheticSpec, generate
from lqsopt.fits import Dataset

# (criterion, passed, detail) rows filled by the acceptance suite
ACCEPTANCE_RESULTS = []


def record(name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def random_dataset(rng, n, p, noise=1.0, outliers=0, shift=50.0):
    X = rng.normal(size=(n, p))
    y = X @ np.ones(p) + noise * rng.normal(size=n)
    if outliers:
        idx = rng.choice(n, outliers, replace=False)
        y[idx] += shift * rng.choice([-1.0, 1.0], size=outliers)
    return Dataset(y, X)


def small_instance(seed):
    """Random oracle-sized instance: n in [6, 14], p in [1, 3], q in [p+1, n]."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 15))
    p = int(rng.integers(1, 4))
    q = int(rng.integers(p + 1, n + 1))
    scheme = "AB"[seed % 2]
    inst = generate(SyntheticSpec(n=n, p=p, pi=0.3, scheme=scheme, seed=seed))
    return inst.data, q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

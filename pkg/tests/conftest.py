import numpy as np
import pytest

from asgd_inference import BatchScheme


def rel_frobenius(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.linalg.norm(b), 1e-300)
    return np.linalg.norm(a - b) / scale


def ar_stream(rng, n, d, rho=0.9, mean=0.5):
    """Correlated stream resembling SGD iterates: AR(1) around a nonzero mean."""
    x = np.empty((n, d))
    cur = rng.standard_normal(d)
    for i in range(n):
        cur = rho * cur + rng.standard_normal(d)
        x[i] = mean + cur
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_scheme():
    # boundaries 1, 4, 13, 32, 62, ...  (C=0.5, beta=3)
    return BatchScheme(C=0.5, beta=3.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

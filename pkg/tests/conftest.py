import sys

import numpy as np
import pytest


def loo_cov(X, y):
    """Sum over i of (b_(i) - b)(b_(i) - b)', built by deleting rows."""
    b = np.linalg.lstsq(X, y, rcond=None)[0]
    acc = np.zeros((X.shape[1], X.shape[1]))
    for i in range(X.shape[0]):
        keep = np.arange(X.shape[0]) != i
        bi = np.linalg.lstsq(X[keep], y[keep], rcond=None)[0]
        acc += np.outer(bi - b, bi - b)
    return acc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

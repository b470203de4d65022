import numpy as np
import pytest

from dempool.features import FeatureSet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_fs(rng, n, d):
    return FeatureSet(rng.standard_normal((n, d)))


def random_psd(rng, d, rows=None):
    B = rng.standard_normal((rows or 2 * d, d)) / np.sqrt(rows or 2 * d)
    return B.T @ B


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)

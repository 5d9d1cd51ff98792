import numpy as np
import pytest

from pbn.core import NEGATIVE, OBSERVED, POSITIVE, ProblemParams, SampleSet


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run table reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params():
    return ProblemParams(pi=0.5, rho=0.125)



def make_positives(X):
    X = np.asarray(X, dtype=float)
    return SampleSet(X, np.full(len(X), POSITIVE), np.full(len(X), OBSERVED))


def make_labeled(X_P, X_N):
    X_P = np.asarray(X_P, dtype=float)
    X_N = np.asarray(X_N, dtype=float)
    return SampleSet(
        np.vstack([X_P, X_N]),
        np.concatenate([np.full(len(X_P), POSITIVE), np.full(len(X_N), NEGATIVE)]),
        np.concatenate([np.full(len(X_P), OBSERVED), np.full(len(X_N), -1)]),
    )

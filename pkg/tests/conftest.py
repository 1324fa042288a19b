import numpy as np
import pytest

from ineqlin import AMATO, GINI, ZENGA, atkinson
from ineqlin.measure import DiscreteMeasure

ALL_KINDS = [GINI, AMATO, ZENGA, atkinson(0.5)]
KIND_IDS = [str(k) for k in ALL_KINDS]


def lognormal_measure(seed, size=100, sigma=1.0, weighted=False):
    rng = np.random.default_rng(seed)
    y = rng.lognormal(0.0, sigma, size=size)
    w = rng.uniform(0.5, 3.0, size=size) if weighted else None
    return DiscreteMeasure(y, w)


def probe_points(m, count=50):
    """Half atoms, half midpoints between consecutive atoms, spread over the support."""
    v = m.values
    half = count // 2
    atoms = v[np.linspace(0, v.size - 1, half).astype(int)]
    k = np.linspace(0, v.size - 2, count - half).astype(int)
    mids = 0.5 * (v[k] + v[k + 1])
    return np.concatenate([atoms, mids])


@pytest.fixture(params=ALL_KINDS, ids=KIND_IDS)
def kind(request):
    return request.param


@pytest.fixture
def small():
    return DiscreteMeasure([1.0, 2.0, 3.0])


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

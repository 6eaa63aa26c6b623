import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def prob_vectors(draw, min_n=2, max_n=8, zeros=True):
    n = draw(st.integers(min_n, max_n))
    w = draw(st.lists(st.floats(0.0 if zeros else 1e-3, 1.0), min_size=n, max_size=n))
    w = np.asarray(w)
    if w.sum() <= 1e-6:
        w = np.ones(n)
    return w / w.sum()


@st.composite
def marginal_pairs(draw, min_n=2, max_n=6, sort=True):
    p = draw(prob_vectors(min_n, max_n))
    q = draw(prob_vectors(len(p), len(p)))
    if sort:
        p, q = np.sort(p)[::-1], np.sort(q)[::-1]
    return p, q


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

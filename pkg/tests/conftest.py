import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from graphcoarsen.graph import build_graph, random_graph

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, n_min=2, n_max=25, connected=False, weighted=True):
    n = draw(st.integers(n_min, n_max))
    p = draw(st.floats(0.05, 0.6))
    seed = draw(st.integers(0, 2**31 - 1))
    return random_graph(n, p, seed, weighted=weighted, connected=connected)


def path(n, w=1.0):
    return build_graph([(i, i + 1, w) for i in range(n - 1)])


def cycle(n):
    return build_graph([(i, (i + 1) % n) for i in range(n)])


def star(leaves):
    return build_graph([(0, k) for k in range(1, leaves + 1)])


def complete(n):
    return build_graph([(i, j) for i in range(n) for j in range(i + 1, n)])


def dense_pinv(g):
    a = g.to_dense()
    return np.linalg.pinv(np.diag(a.sum(1)) - a, hermitian=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

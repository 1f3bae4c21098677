from fractions import Fraction

import pytest
from hypothesis import strategies as st

from chipdiffusion import engine
from chipdiffusion.graph import MultiGraph


@pytest.fixture(params=["python", "numpy"])
def kernel_kind(request, monkeypatch):
    """Run a test once per stepping kernel."""
    monkeypatch.setattr(engine, "SMALL_GRAPH_PAIRS", 10**9 if request.param == "python" else -1)
    return request.param


@st.composite
def edge_lists(draw, max_n=7, max_mult=1):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(1, n) for v in range(u + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return n, [(u, v, draw(st.integers(1, max_mult))) for u, v in chosen]


@st.composite
def instances(draw, max_n=7, max_mult=1, lo=-20, hi=20, rational=False):
    """(graph, raw edge list, labels) with Fraction labels when ``rational``."""
    n, edges = draw(edge_lists(max_n, max_mult))
    if rational:
        den = draw(st.integers(1, 12))
        labels = [Fraction(draw(st.integers(lo * den, hi * den)), den) for _ in range(n)]
    else:
        labels = draw(st.lists(st.integers(lo, hi), min_size=n, max_size=n))
    return MultiGraph(n, edges), edges, labels


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

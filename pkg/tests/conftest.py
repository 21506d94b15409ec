import numpy as np
import pytest
from hypothesis import strategies as st

from netobs.graph import Digraph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def digraphs(draw, max_n=8, self_loops=True):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if self_loops or i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    weights = draw(st.lists(st.floats(0.1, 2.0) | st.floats(-2.0, -0.1),
                            min_size=len(chosen), max_size=len(chosen)))
    return Digraph(n, tuple((i, j, w) for (i, j), w in zip(chosen, weights)))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.SCORECARD:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.SCORECARD:
            terminalreporter.write_line(line)

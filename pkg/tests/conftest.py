import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from entsched.graph import build_graph
from entsched.topology import complete_graph, cycle_graph, path_graph, star_graph


@pytest.fixture
def p3():
    return path_graph(3)


@pytest.fixture
def star4():
    return star_graph(4)


@pytest.fixture
def c6():
    return cycle_graph(6)


@pytest.fixture
def k3():
    return complete_graph(3)


@st.composite
def graphs(draw, min_n=1, max_n=12, connected=False):
    """Random simple graphs; with ``connected`` a random spanning tree is added first."""
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = set()
    if connected and n > 1:
        order = draw(st.permutations(range(n)))
        for k in range(1, n):
            parent = order[draw(st.integers(0, k - 1))]
            chosen.add(tuple(sorted((order[k], parent))))
    if pairs:
        flags = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
        chosen |= {e for e, f in zip(pairs, flags) if f}
    return build_graph(n, sorted(chosen))


def random_connected_graph(gen: np.random.Generator, n: int, prob: float):
    """Random spanning tree plus G(n, prob) extras; used for seeded sweeps."""
    order = gen.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[gen.integers(0, k)]
        edges.add(tuple(sorted((int(order[k]), int(parent)))))
    for i, j in itertools.combinations(range(n), 2):
        if gen.random() < prob:
            edges.add((i, j))
    return build_graph(n, sorted(edges))


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""

    def emit(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} | {detail}"
        print(line)
        _VERDICTS.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)

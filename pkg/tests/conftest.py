import itertools

import numpy as np
import pytest

from eigenratio.graph_core import build_graph


def cycle4():
    return build_graph(4, [0.25] * 4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])


def single_edge():
    return build_graph(2, [0.5, 0.5], [(0, 1, 1.0)])


def random_connected_graph(rng, n, p_extra=0.3, unit=False, lengths=False):
    """Random spanning tree plus extra edges; uniform or random measure."""
    edges = {}
    order = rng.permutation(n)
    for idx in range(1, n):
        i, j = int(order[idx]), int(order[rng.integers(0, idx)])
        edges[(min(i, j), max(i, j))] = None
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in edges and rng.random() < p_extra:
            edges[(i, j)] = None
    out = []
    for i, j in sorted(edges):
        if unit:
            w = p = 1.0
        else:
            w, p = float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.2, 3.0))
        ell = float(rng.uniform(0.5, 2.0)) if lengths else None
        out.append((i, j, w, p, ell))
    if unit:
        mu = np.full(n, 1.0 / n)
    else:
        mu = rng.uniform(0.5, 2.0, n)
        mu /= mu.sum()
    return build_graph(n, list(mu), out)


@pytest.fixture
def c4():
    return cycle4()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the terminal summary prints them all."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(number, ok, detail):
        lines.append((number, bool(ok), detail))
        assert ok, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}")

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from cimsim.ising import Graph, IsingModel, QuboModel

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_ising(rng, n, density=0.6, field=True, integer=False):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < density
    draw = (lambda k: rng.integers(-3, 4, k).astype(float)) if integer else (lambda k: rng.normal(size=k))
    vals = draw(iu.size)
    pairs = {(int(i), int(j)): float(v) for i, j, v, k in zip(iu, ju, vals, keep) if k and v != 0}
    h = draw(n) if field else None
    return IsingModel(n, pairs, h, float(rng.normal()) if not integer else 0.0)


def random_qubo(rng, n, density=0.6):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < density
    quad = {(int(i), int(j)): float(rng.normal()) for i, j, k in zip(iu, ju, keep) if k}
    return QuboModel(n, rng.normal(size=n), quad, float(rng.normal()))


def random_weighted_graph(rng, n, p=0.5, integer=True):
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, float(rng.integers(1, 5)) if integer else float(rng.uniform(0.1, 3))))
    return Graph(n, tuple(edges))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

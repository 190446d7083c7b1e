import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cimsim.graphs import (MobiusSpec, RandomGraphSpec, degrees, density, edge_budget, mobius_ladder,
                           mobius_maxcut, random_graph)
from cimsim.io import dumps_graph
from cimsim.ising import Graph, cut_values, maxcut_to_ising
from cimsim.solvers import brute_force
from conftest import seeds


def test_mobius_counts():
    assert (mobius_ladder(MobiusSpec(6)).n, mobius_ladder(MobiusSpec(6)).m) == (6, 9)
    assert mobius_ladder(MobiusSpec(100)).m == 150


@pytest.mark.parametrize("v", [2, 3, 7, 0])
def test_mobius_rejects_bad_sizes(v):
    with pytest.raises(ValueError):
        mobius_ladder(MobiusSpec(v))


@pytest.mark.parametrize("v", range(6, 42, 2))
def test_mobius_is_three_regular(v):
    g = mobius_ladder(v)
    assert g.m == 3 * v // 2 and np.all(degrees(g) == 3)


def test_mobius_edges():
    edges = {(u, v) for u, v, _ in mobius_ladder(8).edges}
    assert {(0, 1), (0, 7), (0, 4), (3, 7)} <= edges


@pytest.mark.parametrize("v", [4, 6, 8, 10, 12, 14, 16, 18, 20])
def test_mobius_maxcut_matches_brute_force(v):
    g = mobius_ladder(v)
    e, _ = brute_force(maxcut_to_ising(g), max_optima=1)
    assert (g.total_weight - e) / 2 == mobius_maxcut(v)


def test_mobius_maxcut_v8():
    assert mobius_maxcut(8) == 10


@pytest.mark.parametrize("v,cut", [(20, 28), (40, 58), (60, 88), (80, 118), (100, 148)])
def test_mobius_reference_values(v, cut):
    assert mobius_maxcut(v) == cut


def test_mobius_maxcut_witness_bound():
    # an alternating colouring cuts every cycle edge and the chords when V/2 is odd
    for v in (10, 14, 22):
        s = np.array([(-1) ** i for i in range(v)])
        assert cut_values(mobius_ladder(v), s)[0] == 3 * v // 2 == mobius_maxcut(v)


def test_random_graph_edge_counts():
    assert random_graph(RandomGraphSpec(100, 0.017, 1)).m == 84
    g = random_graph(RandomGraphSpec(100, 0.989, 1))
    assert abs(density(g) - 0.989) < 0.005


def test_random_graph_is_reproducible():
    a = dumps_graph(random_graph(RandomGraphSpec(50, 0.3, 99)))
    assert a == dumps_graph(random_graph(RandomGraphSpec(50, 0.3, 99)))
    assert a != dumps_graph(random_graph(RandomGraphSpec(50, 0.3, 100)))


@given(seeds, st.integers(2, 40), st.floats(0.001, 1.0))
def test_random_graph_budget(seed, v, d):
    g = random_graph(RandomGraphSpec(v, d, seed))
    total = v * (v - 1) // 2
    assert g.m == min(max(round(d * total), 1), total) == edge_budget(v, d)
    pairs = {(a, b) for a, b, _ in g.edges}
    assert len(pairs) == g.m and all(a < b for a, b in pairs)
    assert all(w == 1.0 for *_, w in g.edges)


@pytest.mark.parametrize("spec", [RandomGraphSpec(1, 0.5), RandomGraphSpec(10, 0.0), RandomGraphSpec(10, 1.5)])
def test_random_graph_rejects(spec):
    with pytest.raises(ValueError):
        random_graph(spec)


def test_density_examples():
    k4 = Graph(4, tuple((i, j) for i in range(4) for j in range(i + 1, 4)))
    assert density(k4) == 1.0
    assert density(Graph(10)) == 0.0
    assert density(mobius_ladder(100)) == pytest.approx(150 / 4950)
    with pytest.raises(ValueError):
        density(Graph(1))


def test_reference_optima_match_generators():
    data = json.loads(resources.files("cimsim").joinpath("data/reference_optima.json").read_text())
    for entry in data["mobius"].values():
        assert entry["max_cut"] == mobius_maxcut(entry["vertices"])
        assert entry["sa_best"] <= entry["max_cut"]
    for entry in data["random"].values():
        g = random_graph(RandomGraphSpec(entry["vertices"], entry["target_density"], entry["seed"]))
        assert g.m == entry["edges"]
        assert entry["max_cut"] <= g.m

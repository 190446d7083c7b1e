"""Benchmark Max-Cut instance generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cimsim.ising import Graph


@dataclass(frozen=True)
class MobiusSpec:
    vertices: int


@dataclass(frozen=True)
class RandomGraphSpec:
    vertices: int
    target_density: float
    seed: int = 0


def mobius_ladder(spec: MobiusSpec | int) -> Graph:
    """V-cycle plus antipodal chords ``(i, i + V/2)``; unit weights."""
    v = spec.vertices if isinstance(spec, MobiusSpec) else int(spec)
    if v < 4 or v % 2:
        raise ValueError(f"Mobius ladder needs an even vertex count >= 4, got {v}")
    half = v // 2
    pairs = {tuple(sorted((i, (i + 1) % v))) for i in range(v)}
    pairs |= {(i, i + half) for i in range(half)}
    return Graph(v, tuple((a, b, 1.0) for a, b in sorted(pairs)))


def edge_budget(vertices: int, density: float) -> int:
    total = vertices * (vertices - 1) // 2
    return int(min(max(round(density * total), 1), total))


def random_graph(spec: RandomGraphSpec) -> Graph:
    """G(n, m) graph: exactly ``round(d * V(V-1)/2)`` distinct unit edges, seeded."""
    v, d = spec.vertices, spec.target_density
    if v < 2:
        raise ValueError("random graph needs at least 2 vertices")
    if not 0 < d <= 1:
        raise ValueError(f"target density must lie in (0, 1], got {d}")
    m = edge_budget(v, d)
    rng = np.random.default_rng(spec.seed)
    iu, ju = np.triu_indices(v, k=1)
    pick = np.sort(rng.choice(iu.size, size=m, replace=False))
    return Graph(v, tuple((int(iu[k]), int(ju[k]), 1.0) for k in pick))


def density(g: Graph) -> float:
    if g.n < 2:
        raise ValueError("density is undefined for fewer than 2 vertices")
    return 2 * g.m / (g.n * (g.n - 1))


def degrees(g: Graph) -> np.ndarray:
    deg = np.zeros(g.n, dtype=np.int64)
    for u, v, _ in g.edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def mobius_maxcut(vertices: int) -> int:
    """Exact maximum cut of the Mobius ladder by a transfer-matrix sweep over rungs.

    Rung ``i`` joins ``i`` and ``i + V/2``; consecutive rungs are joined along both
    rails, and the last rung closes onto the first with the rails swapped.
    """
    if vertices < 4 or vertices % 2:
        raise ValueError("Mobius ladder needs an even vertex count >= 4")
    k = vertices // 2
    states = [(a, b) for a in (0, 1) for b in (0, 1)]
    best = -1
    for first in states:
        val = {first: int(first[0] != first[1])}
        for _ in range(1, k):
            val = {
                st: max(v + (p[0] != st[0]) + (p[1] != st[1]) for p, v in val.items()) + (st[0] != st[1])
                for st in states
            }
        for st, v in val.items():
            best = max(best, v + (st[0] != first[1]) + (st[1] != first[0]))
    return best

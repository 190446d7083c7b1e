"""Ising, QUBO and Max-Cut problem representations with exact conversions.

Sign convention throughout::

    H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + offset,   s_i in {+1, -1}

Each unordered pair is stored once (``i < j``). Dense exports are symmetric with
``J_ij`` in both triangles, so ``H = -0.5 * s @ Jd @ s - h @ s + offset``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class DimensionError(ValueError):
    """Raised when a configuration does not match the model size."""


def _as_spins(spins, n: int) -> np.ndarray:
    s = np.asarray(spins)
    if s.shape[-1:] != (n,):
        raise DimensionError(f"expected {n} spins, got shape {s.shape}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s.astype(np.float64)


def _canonical_pairs(pairs: Mapping[tuple[int, int], float], n: int, what: str) -> dict:
    out: dict[tuple[int, int], float] = {}
    for (i, j), value in pairs.items():
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"{what}: self-coupling on index {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"{what}: index pair ({i}, {j}) outside [0, {n})")
        key = (i, j) if i < j else (j, i)
        if key in out:
            raise ValueError(f"{what}: pair {key} given twice")
        out[key] = float(value)
    return out


def _pair_arrays(pairs: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    keys = sorted(pairs)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    vals = np.array([pairs[k] for k in keys], dtype=np.float64)
    return rows, cols, vals


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Spin model with sparse pair couplings, an optional field and an offset."""

    n: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    field: np.ndarray | None = None
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("spin count must be non-negative")
        object.__setattr__(self, "couplings", _canonical_pairs(self.couplings, self.n, "IsingModel"))
        if self.field is not None:
            h = np.array(self.field, dtype=np.float64)
            if h.shape != (self.n,):
                raise DimensionError(f"field must have length {self.n}")
            h.setflags(write=False)
            object.__setattr__(self, "field", h)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_arrays", _pair_arrays(self.couplings))

    @classmethod
    def from_dense(cls, matrix, field=None, offset: float = 0.0, *, double_sum: bool = False) -> "IsingModel":
        """Build a model from a dense coupling matrix.

        By default the matrix is read as this package's symmetric export: the
        pair coupling is ``matrix[i, j]`` for ``i < j``. With ``double_sum=True``
        the matrix is taken to define ``-sum_{i != j} M_ij s_i s_j`` and each
        pair receives ``M_ij + M_ji``.
        """
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("coupling matrix must be square")
        n = m.shape[0]
        upper = m + m.T if double_sum else m
        if not double_sum and not np.allclose(m, m.T):
            raise ValueError("coupling matrix must be symmetric unless double_sum=True")
        iu, ju = np.triu_indices(n, k=1)
        nz = upper[iu, ju] != 0
        pairs = {(int(i), int(j)): float(v) for i, j, v in zip(iu[nz], ju[nz], upper[iu, ju][nz])}
        return cls(n, pairs, field, offset)

    @property
    def has_field(self) -> bool:
        return self.field is not None and bool(np.any(self.field != 0))

    def field_vector(self) -> np.ndarray:
        return np.zeros(self.n) if self.field is None else self.field

    def coupling_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row indices, column indices and values of the stored pairs (i < j)."""
        return self._arrays

    def to_dense(self) -> np.ndarray:
        rows, cols, vals = self._arrays
        jd = np.zeros((self.n, self.n))
        jd[rows, cols] = vals
        jd[cols, rows] = vals
        return jd

    def energies(self, spins) -> np.ndarray:
        """Energy of each row of a ``(k, n)`` spin array."""
        s = _as_spins(np.atleast_2d(spins), self.n)
        rows, cols, vals = self._arrays
        e = -(s[:, rows] * s[:, cols]) @ vals
        if self.field is not None:
            e -= s @ self.field
        return e + self.offset

    def __repr__(self) -> str:
        return f"IsingModel(n={self.n}, pairs={len(self.couplings)}, field={self.has_field}, offset={self.offset})"


@dataclass(frozen=True, eq=False)
class QuboModel:
    """Binary quadratic objective ``sum q_i x_i + sum_{i<j} q_ij x_i x_j + offset``."""

    n: int
    linear: np.ndarray | None = None
    quadratic: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        lin = np.zeros(self.n) if self.linear is None else np.array(self.linear, dtype=np.float64)
        if lin.shape != (self.n,):
            raise DimensionError(f"linear terms must have length {self.n}")
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", _canonical_pairs(self.quadratic, self.n, "QuboModel"))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_arrays", _pair_arrays(self.quadratic))

    def quadratic_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._arrays

    def values(self, x) -> np.ndarray:
        """Objective of each row of a ``(k, n)`` binary array."""
        b = np.atleast_2d(np.asarray(x))
        if b.shape[-1] != self.n:
            raise DimensionError(f"expected {self.n} variables, got shape {b.shape}")
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("QUBO variables must be 0 or 1")
        b = b.astype(np.float64)
        rows, cols, vals = self._arrays
        return b @ self.linear + (b[:, rows] * b[:, cols]) @ vals + self.offset

    def __repr__(self) -> str:
        return f"QuboModel(n={self.n}, pairs={len(self.quadratic)}, offset={self.offset})"


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted undirected graph; edges are stored as ``(u, v, w)`` with ``u < v``."""

    n: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        seen = set()
        canon = []
        for e in self.edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n})")
            u, v = min(u, v), max(u, v)
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            canon.append((u, v, w))
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def ising_energy(model: IsingModel, spins) -> float:
    """Energy of a single spin configuration."""
    s = np.asarray(spins)
    if s.ndim != 1:
        raise DimensionError("ising_energy takes a single configuration")
    return float(model.energies(s)[0])


def qubo_value(q: QuboModel, x) -> float:
    b = np.asarray(x)
    if b.ndim != 1:
        raise DimensionError("qubo_value takes a single assignment")
    return float(q.values(b)[0])


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute ``x_i = (1 + s_i) / 2``; the result reproduces the QUBO pointwise."""
    h = np.zeros(q.n)
    pairs: dict[tuple[int, int], float] = {}
    offset = q.offset
    for i, qi in enumerate(q.linear):
        h[i] -= qi / 2
        offset += qi / 2
    for (i, j), qij in q.quadratic.items():
        if qij == 0:
            continue
        pairs[(i, j)] = -qij / 4
        h[i] -= qij / 4
        h[j] -= qij / 4
        offset += qij / 4
    return IsingModel(q.n, pairs, h, offset)


def spins_to_binary(spins) -> np.ndarray:
    return ((np.asarray(spins) + 1) // 2).astype(np.int8)


def binary_to_spins(x) -> np.ndarray:
    return (2 * np.asarray(x) - 1).astype(np.int8)


def absorb_field(model: IsingModel) -> IsingModel:
    """Fold the linear field into couplings with an extra ancilla spin (index ``n``).

    With the ancilla fixed at +1 the energy is unchanged; the other sector is its
    global-flip image, so minima coincide. Use :func:`drop_ancilla` to map back.
    """
    a = model.n
    pairs = dict(model.couplings)
    for i, hi in enumerate(model.field_vector()):
        if hi != 0:
            pairs[(i, a)] = float(hi)
    return IsingModel(model.n + 1, pairs, None, model.offset)


def drop_ancilla(spins) -> np.ndarray:
    """Gauge-fix so the ancilla (last spin) is +1, then remove it."""
    s = np.asarray(spins)
    return (s * s[..., -1:])[..., :-1]


def maxcut_to_ising(g: Graph) -> IsingModel:
    """Antiferromagnetic encoding ``J_uv = -w_uv``: ``cut = (W - H) / 2``."""
    return IsingModel(g.n, {(u, v): -w for u, v, w in g.edges})


def cut_values(g: Graph, spins) -> np.ndarray:
    s = np.atleast_2d(np.asarray(spins))
    if s.shape[-1] != g.n:
        raise DimensionError(f"expected {g.n} spins, got shape {s.shape}")
    if not g.edges:
        return np.zeros(s.shape[0])
    u, v, w = (np.array(c) for c in zip(*g.edges))
    return (s[:, u] != s[:, v]) @ w.astype(np.float64)


def cut_value(g: Graph, spins) -> float:
    s = np.asarray(spins)
    if s.ndim != 1:
        raise DimensionError("cut_value takes a single partition")
    _as_spins(s, g.n)
    return float(cut_values(g, s)[0])


def energy_to_cut(g: Graph, energy):
    return (g.total_weight - np.asarray(energy)) / 2


def cut_to_energy(g: Graph, cut):
    return g.total_weight - 2 * np.asarray(cut)


def all_configs(n: int) -> np.ndarray:
    """Every spin configuration as rows of a ``(2**n, n)`` array, bit ``i`` of the row index -> spin ``i``."""
    idx = np.arange(2**n, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


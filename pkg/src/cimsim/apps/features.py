"""Correlation-based feature selection as a QUBO, and the two-sample KS statistic."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from cimsim.ising import QuboModel, qubo_to_ising, spins_to_binary
from cimsim.solvers import MAX_EXACT_SPINS, AnnealSchedule, brute_force, simulated_annealing


@dataclass(frozen=True, eq=False)
class FeatureSelectionInstance:
    rho_v: np.ndarray
    rho: np.ndarray
    alpha: float

    def __post_init__(self):
        rv = np.asarray(self.rho_v, dtype=np.float64)
        r = np.asarray(self.rho, dtype=np.float64)
        n = rv.size
        if rv.ndim != 1 or r.shape != (n, n):
            raise ValueError("rho_v must be a vector and rho an n x n matrix")
        if np.any(rv < 0) or np.any(r < 0) or np.any(r > 1):
            raise ValueError("relevances must be >= 0 and correlations lie in [0, 1]")
        if not np.allclose(r, r.T):
            raise ValueError("feature correlation matrix must be symmetric")
        if np.any(np.diag(r) != 0):
            raise ValueError("feature correlation matrix must have a zero diagonal")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        object.__setattr__(self, "rho_v", rv)
        object.__setattr__(self, "rho", r)

    @property
    def n(self) -> int:
        return self.rho_v.size


def feature_selection_qubo(inst: FeatureSelectionInstance) -> QuboModel:
    """Minimization form: ``-a sum rv_j x_j + (1 - a) sum_{j<k} 2 rho_jk x_j x_k``."""
    a = inst.alpha
    iu, ju = np.triu_indices(inst.n, k=1)
    quad = {(int(i), int(j)): 2 * (1 - a) * inst.rho[i, j] for i, j in zip(iu, ju) if inst.rho[i, j] != 0}
    return QuboModel(inst.n, -a * inst.rho_v, quad)


def selection_objective(inst: FeatureSelectionInstance, x) -> float:
    """Direct evaluation over ordered pairs ``j != k`` (no pair folding)."""
    x = np.asarray(x, dtype=np.float64)
    relevance = inst.alpha * float(x @ inst.rho_v)
    redundancy = sum(x[j] * x[k] * inst.rho[j, k]
                     for j in range(inst.n) for k in range(inst.n) if k != j)
    return -(relevance - (1 - inst.alpha) * redundancy)


def select_features(inst: FeatureSelectionInstance, sweeps: int = 2000, seed: int = 0) -> tuple[np.ndarray, float]:
    """Minimizing mask: exhaustive up to the brute-force limit, annealing beyond."""
    q = feature_selection_qubo(inst)
    ising = qubo_to_ising(q)
    if q.n <= MAX_EXACT_SPINS:
        _, optima = brute_force(ising, max_optima=1)
        spins = optima[0]
    else:
        spins, _ = simulated_annealing(ising, AnnealSchedule.scaled(ising, sweeps, seed))
    x = spins_to_binary(spins)
    return x, float(q.values(x)[0])


def pearson_matrix(data, label) -> tuple[np.ndarray, np.ndarray]:
    """Absolute Pearson correlations feature-label (vector) and feature-feature (matrix).

    ``data`` has one column per feature. Constant columns get zero relevance and
    zero correlations, with a warning.
    """
    X = np.asarray(data, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2 or y.shape != (X.shape[0],):
        raise ValueError("need at least 2 rows and one label per row")
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt((Xc**2).sum(axis=0))
    sy = np.sqrt((yc**2).sum())
    flat = sx == 0
    if flat.any():
        warnings.warn(f"zero-variance feature columns {np.flatnonzero(flat).tolist()}", RuntimeWarning)
    if sy == 0:
        warnings.warn("label column has zero variance", RuntimeWarning)
    safe = np.where(flat, 1.0, sx)
    rho_v = np.zeros(X.shape[1]) if sy == 0 else np.abs(Xc.T @ yc) / (safe * sy)
    rho = np.abs(Xc.T @ Xc) / np.outer(safe, safe)
    rho[flat, :] = 0
    rho[:, flat] = 0
    rho_v[flat] = 0
    np.fill_diagonal(rho, 0)
    return np.clip(rho_v, 0, 1), np.clip(rho, 0, 1)


def ks_statistic(a, b) -> float:
    """Exact two-sample KS distance ``sup_t |F_a(t) - F_b(t)|`` with right-continuous CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs two non-empty samples")
    # the sup is attained at a sample point; evaluate both CDFs after each tie group
    t = np.concatenate([a, b])
    fa = np.searchsorted(a, t, side="right") / a.size
    fb = np.searchsorted(b, t, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def linear_score(data, label, selected) -> np.ndarray:
    """Proxy score: standardized selected features signed by their label correlation, summed."""
    X = np.asarray(data, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    idx = np.flatnonzero(np.asarray(selected))
    if idx.size == 0:
        return np.zeros(X.shape[0])
    Z = X[:, idx] - X[:, idx].mean(axis=0)
    sd = Z.std(axis=0)
    Z = Z / np.where(sd == 0, 1, sd)
    sign = np.sign(Z.T @ (y - y.mean()))
    return Z @ sign


def alpha_sweep(data, label, alphas, sweeps: int = 2000, seed: int = 0) -> list[dict]:
    """Selected mask per alpha, with KS of the proxy score between the two label classes."""
    y = np.asarray(label)
    classes = np.unique(y)
    rho_v, rho = pearson_matrix(data, y)
    rows = []
    for a in alphas:
        inst = FeatureSelectionInstance(rho_v, rho, float(a))
        mask, value = select_features(inst, sweeps, seed)
        row = {"alpha": float(a), "selected": [int(i) for i in np.flatnonzero(mask)], "objective": value}
        if classes.size == 2:
            s = linear_score(data, y, mask)
            row["ks"] = ks_statistic(s[y == classes[0]], s[y == classes[1]])
        rows.append(row)
    return rows

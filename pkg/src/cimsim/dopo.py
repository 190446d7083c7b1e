"""Single-DOPO master equation in a truncated number basis, plus Wigner rendering.

Signal-mode generator (pump adiabatically eliminated into the squeezing rate
``S = kappa * F / gamma_p``)::

    d rho/dt = (S/2) [a+^2 - a^2, rho]
             + gamma_s (2 a rho a+ - a+a rho - rho a+a)
             + (B/2)   (2 a^2 rho a+^2 - a+^2 a^2 rho - rho a+^2 a^2)

Threshold sits at ``S = gamma_s``; above it the mean photon number grows like
``(S - gamma_s) / B``. Quadratures use ``alpha = (x + i p) / sqrt(2)``, so the
vacuum Wigner function is ``exp(-x^2 - p^2) / pi``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

RK4_STABILITY = 2.5


class TruncationError(RuntimeError):
    pass


class SteadyStateError(RuntimeError):
    def __init__(self, residual: float, t: float):
        super().__init__(f"no steady state by t={t:g}: residual {residual:.3e}")
        self.residual = residual


@dataclass(frozen=True)
class DopoParams:
    S: float
    gamma_s: float = 1.0
    B: float = 0.2

    def __post_init__(self):
        if not self.gamma_s > 0:
            raise ValueError("gamma_s must be positive")
        if not self.B >= 0:
            raise ValueError("B must be non-negative")
        if self.S < 0:
            raise ValueError("S must be non-negative")

    @property
    def threshold(self) -> float:
        return self.gamma_s


@dataclass
class DensityMatrix:
    """Number-basis state with bookkeeping from the last evolution."""

    data: np.ndarray
    t: float = 0.0
    leakage: float = 0.0
    trace_drift: float = 0.0

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_max(self) -> int:
        return self.dim - 1

    def check(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8, psd_tol: float = 1e-8):
        r = self.data
        if np.abs(r - r.conj().T).max() > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r).real - 1) > trace_tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh((r + r.conj().T) / 2).min() < -psd_tol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self


def vacuum(n_max: int) -> DensityMatrix:
    return fock(0, n_max)


def fock(k: int, n_max: int) -> DensityMatrix:
    r = np.zeros((n_max + 1, n_max + 1))
    r[k, k] = 1.0
    return DensityMatrix(r)


def coherent_ket(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha) + 1e-300) - log_fact / 2)
    if alpha == 0:
        mag = (n == 0).astype(float)
    return mag * np.exp(1j * np.angle(alpha) * n)


def cat_mixture(alpha: complex, n_max: int) -> DensityMatrix:
    """Equal incoherent mixture of coherent states at ``+alpha`` and ``-alpha``."""
    kp, km = coherent_ket(alpha, n_max), coherent_ket(-alpha, n_max)
    r = 0.5 * (np.outer(kp, kp.conj()) + np.outer(km, km.conj()))
    return DensityMatrix(r / np.trace(r).real)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


class Generator:
    """Precomputed pieces of the generator, ``L(rho) = M rho + rho M+ + jumps``."""

    def __init__(self, params: DopoParams, dim: int):
        self.params, self.dim = params, dim
        S, g, B = params.S, params.gamma_s, params.B
        a = annihilation(dim)
        a2 = a @ a
        n = np.arange(dim, dtype=np.float64)
        self.M = (S / 2) * (a2.T - a2) - np.diag(g * n + (B / 2) * n * (n - 1))
        self.Mt = self.M.T.copy()
        # a rho a+ and a^2 rho a+^2 as shifted, weighted copies of rho
        self.w1 = 2 * g * np.sqrt(np.outer(n[1:], n[1:]))
        pair = n[2:] * (n[2:] - 1)
        self.w2 = B * np.sqrt(np.outer(pair, pair))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = self.M @ rho + rho @ self.Mt
        out[:-1, :-1] += self.w1 * rho[1:, 1:]
        out[:-2, :-2] += self.w2 * rho[2:, 2:]
        return out

    @property
    def max_rate(self) -> float:
        """Bound on the generator's fastest rate at the truncation edge."""
        p, k = self.params, self.dim - 1
        return 2 * p.gamma_s * k + p.B * k * (k - 1) + 2 * p.S * k


def master_rhs(rho, params: DopoParams) -> np.ndarray:
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError("density matrix must be square")
    return Generator(params, r.shape[0])(r)


def default_dt(params: DopoParams, n_max: int) -> float:
    return 0.8 * RK4_STABILITY / Generator(params, n_max + 1).max_rate


def evolve(rho0, params: DopoParams, t_final: float, dt: float | None = None,
           leakage_tol: float = 1e-4, _gen: Generator | None = None) -> DensityMatrix:
    """Fixed-step RK4 with re-Hermitization and trace renormalization every step.

    ``leakage`` is the largest population seen in the top level ``|n_max>``;
    ``trace_drift`` is the accumulated pre-renormalization trace error per unit time.
    """
    state = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(np.asarray(rho0))
    r = state.data
    r = r.real.copy() if np.isrealobj(r) or not np.any(r.imag) else r.astype(complex)
    gen = _gen or Generator(params, r.shape[0])
    dt = default_dt(params, r.shape[0] - 1) if dt is None else dt
    if dt * gen.max_rate >= RK4_STABILITY:
        raise ValueError(f"dt={dt:g} too large: dt * max_rate = {dt * gen.max_rate:.3g} >= {RK4_STABILITY}")
    steps = int(round(t_final / dt)) if t_final > 0 else 0
    leak = float(abs(r[-1, -1]))
    drift = 0.0
    for _ in range(steps):
        k1 = gen(r)
        k2 = gen(r + 0.5 * dt * k1)
        k3 = gen(r + 0.5 * dt * k2)
        k4 = gen(r + dt * k3)
        r = r + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        r = 0.5 * (r + r.conj().T)
        tr = np.trace(r).real
        drift += abs(tr - 1)
        r /= tr
        leak = max(leak, float(abs(r[-1, -1])))
    if leak > leakage_tol:
        raise TruncationError(f"population {leak:.2e} reached |n_max>; increase n_max")
    t = steps * dt
    return DensityMatrix(r, state.t + t, leak, drift / t if t else 0.0)


def steady_state(params: DopoParams, n_max: int = 60, tol: float = 1e-8, dt: float | None = None,
                 chunk: float = 2.0, max_time: float = 400.0) -> DensityMatrix:
    """Evolve from vacuum until the Frobenius norm of the generator output drops below ``tol``."""
    gen = Generator(params, n_max + 1)
    state = vacuum(n_max)
    residual = np.linalg.norm(gen(state.data))
    while residual >= tol:
        if state.t >= max_time:
            raise SteadyStateError(residual, state.t)
        state = evolve(state, params, chunk, dt, _gen=gen)
        residual = np.linalg.norm(gen(state.data))
    return state


def photon_number(rho) -> float:
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.real(np.diag(r)) @ np.arange(r.shape[0]))


def mean_field(rho) -> complex:
    """Expectation value of the annihilation operator."""
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return complex(np.sum(np.diagonal(r, offset=-1) * np.sqrt(np.arange(1, r.shape[0]))))


@dataclass
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # indexed [p, x]
    grid_ok: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def normalization(self) -> float:
        return float(self.values.sum() * (self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def to_csv(self) -> str:
        rows = ["x,p,W"]
        for j, pv in enumerate(self.p.tolist()):
            rows += [f"{xv!r},{pv!r},{w!r}" for xv, w in zip(self.x.tolist(), self.values[j].tolist())]
        return "\n".join(rows) + "\n"

    def sidecar(self) -> str:
        return json.dumps({**self.meta, "normalization": self.normalization,
                           "trace_residual": abs(self.normalization - 1), "grid_ok": self.grid_ok},
                          sort_keys=True)


def read_wigner_csv(text: str) -> WignerGrid:
    data = np.array([[float(v) for v in line.split(",")] for line in text.strip().splitlines()[1:]])
    x = np.unique(data[:, 0])
    p = np.unique(data[:, 1])
    return WignerGrid(x, p, data[:, 2].reshape(p.size, x.size))


def wigner(rho, x_max: float | None = None, points: int = 241, p_max: float | None = None,
           meta: dict | None = None) -> WignerGrid:
    """Wigner function on a uniform ``(x, p)`` grid.

    ``W(x, p) = Tr[rho D(alpha) P D(alpha)+] / pi`` with ``alpha = (x + i p) / sqrt(2)``,
    which is ``(2/pi) Tr[...]`` per unit ``d^2 alpha`` rewritten per unit ``dx dp``.

    The displaced-parity matrix elements ``<m|D P D+|n>`` are generated by the
    Laguerre three-term recursion, so they are exact for every retained level.
    """
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    dim = r.shape[0]
    if x_max is None:
        x_max = 2 * math.sqrt(dim)
    p_max = x_max if p_max is None else p_max
    x = np.linspace(-x_max, x_max, points)
    p = np.linspace(-p_max, p_max, points)
    A = (x[None, :] + 1j * p[:, None]) / math.sqrt(2)
    two_a, two_ac = 2 * A, 2 * np.conj(A)

    # row[k] holds the m-th row of displaced-parity elements, times pi
    row = [np.exp(-2 * np.abs(A) ** 2) + 0j]
    W = r[0, 0].real * row[0].real
    for k in range(1, dim):
        row.append(two_a * row[k - 1] / math.sqrt(k))
        W += 2 * np.real(r[0, k] * row[k])
    for m in range(1, dim):
        sm = math.sqrt(m)
        prev_diag = row[m]
        row[m] = (two_ac * prev_diag - sm * row[m - 1]) / sm
        W += np.real(r[m, m] * row[m])
        carry = prev_diag
        for k in range(m + 1, dim):
            new = (two_a * row[k - 1] - sm * carry) / math.sqrt(k)
            carry = row[k]
            row[k] = new
            W += 2 * np.real(r[m, k] * row[k])
    W = W / math.pi

    grid = WignerGrid(x, p, W, meta=dict(meta or {}))
    edge = max(np.abs(W[0]).max(), np.abs(W[-1]).max(), np.abs(W[:, 0]).max(), np.abs(W[:, -1]).max())
    grid.grid_ok = bool(edge < 1e-6 * np.abs(W).max() and abs(grid.normalization - 1) < 1e-3)
    return grid


def _peaks(y: np.ndarray, x: np.ndarray) -> list[tuple[float, float]]:
    """Local maxima of a sampled curve, refined by a parabola through three samples."""
    out = []
    for i in range(1, y.size - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            den = y[i - 1] - 2 * y[i] + y[i + 1]
            shift = 0.5 * (y[i - 1] - y[i + 1]) / den if den != 0 else 0.0
            xp = x[i] + shift * (x[1] - x[0])
            out.append((y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift, xp))
    return out


def lobe_positions(w: WignerGrid) -> list[float]:
    """x positions of the two highest maxima along the p = 0 slice (or the only one)."""
    j = int(np.argmin(np.abs(w.p)))
    peaks = sorted(_peaks(w.values[j], w.x), reverse=True)[:2]
    return sorted(float(xp) for _, xp in peaks)


def lobe_separation(w: WignerGrid) -> float:
    pos = lobe_positions(w)
    return float(pos[1] - pos[0]) if len(pos) == 2 else 0.0

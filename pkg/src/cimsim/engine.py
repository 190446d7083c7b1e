"""Discrete-time measurement-feedback CIM simulator.

Each round every pulse amplitude follows a pump-ramped Euler-Maruyama step::

    x_i <- x_i + dt * [(p(t) - 1) x_i - sat x_i^3 + f_i] + noise_amp * sqrt(dt) * xi_i
    f_i  = r * sum_j J_ij s_j

with ``s = sign(x)`` (binary feedback) or ``s = x`` (analog feedback). The
``+r`` sign makes the injection descend ``H = -sum J s s``. Couplings are
divided by ``max_i sum_j |J_ij|`` before simulation so ``|f_i| <= r`` in the
binary mode.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from cimsim.ising import IsingModel, absorb_field, drop_ancilla
from cimsim import solvers


class NumericalDivergence(FloatingPointError):
    def __init__(self, round_index: int):
        super().__init__(f"amplitudes became non-finite at round {round_index}")
        self.round_index = round_index


@dataclass(frozen=True)
class PumpSchedule:
    p_start: float = 0.5
    p_end: float = 1.5
    rounds: int = 2000

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.p_start < 1:
            raise ValueError("pump must start below threshold (p_start < 1)")
        if not self.p_end > self.p_start:
            raise ValueError("pump must increase (p_end > p_start)")

    def pump(self, t: int) -> float:
        """Normalized pump at round ``t`` (0-based), linear from start to end."""
        if self.rounds == 1:
            return self.p_start
        return self.p_start + (self.p_end - self.p_start) * t / (self.rounds - 1)


# Frozen after calibration on Mobius ladders (V = 20 ... 100).
@dataclass(frozen=True)
class CimParams:
    schedule: PumpSchedule = field(default_factory=PumpSchedule)
    r: float = 0.1
    noise_amp: float = 0.1
    dt: float = 0.1
    seed: int = 0
    sat: float = 1.0
    x0_std: float | None = None
    feedback: str = "binary"
    normalize: bool = True

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("feedback gain r must be positive")
        if self.noise_amp < 0:
            raise ValueError("noise_amp must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.feedback not in ("binary", "analog"):
            raise ValueError("feedback must be 'binary' or 'analog'")

    @property
    def initial_std(self) -> float:
        return self.noise_amp if self.x0_std is None else self.x0_std

    def to_dict(self) -> dict:
        d = asdict(self)
        sched = d.pop("schedule")
        return {**{f"pump_{k[2:]}" if k.startswith("p_") else k: v for k, v in sched.items()}, **d}

    @classmethod
    def from_dict(cls, d: dict) -> "CimParams":
        """Build from a flat mapping (``pump_start``, ``pump_end``, ``rounds``, ``r``, ...)."""
        d = {k.replace("-", "_"): v for k, v in d.items()}
        sched = PumpSchedule(
            float(d.pop("pump_start", PumpSchedule.p_start)),
            float(d.pop("pump_end", PumpSchedule.p_end)),
            int(d.pop("rounds", PumpSchedule.rounds)),
        )
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for k, v in d.items():
            if k not in known or k == "schedule":
                raise ValueError(f"unknown CIM parameter '{k}'")
            kwargs[k] = _coerce(k, v)
        return cls(schedule=sched, **kwargs)


def _coerce(key: str, value):
    if key == "seed":
        return int(value)
    if key == "normalize":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    if key == "feedback":
        return str(value)
    if key == "x0_std":
        return None if value in (None, "", "none", "None") else float(value)
    return float(value)


def load_params(path) -> dict:
    """Read a JSON object or ``key = value`` lines into a flat parameter mapping."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"bad config line: {raw!r}")
        out[key.strip()] = value.strip()
    return out


@dataclass
class Trajectory:
    amplitudes: np.ndarray
    energy: np.ndarray
    final: np.ndarray
    rounds_to_target: int | None = None

    def to_csv(self) -> str:
        n = self.amplitudes.shape[1]
        header = ",".join(["round", *(f"x_{i}" for i in range(n)), "energy"])
        rows = [header]
        for t, (x, e) in enumerate(zip(self.amplitudes, self.energy), start=1):
            rows.append(",".join([str(t), *(repr(float(v)) for v in x), repr(float(e))]))
        return "\n".join(rows) + "\n"


def read_trajectory_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    lines = text.strip().splitlines()
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return data[:, 1:-1], data[:, -1]


def readout(x) -> np.ndarray:
    """Spin readout by amplitude sign; an exact zero reads as +1."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("readout of non-finite amplitudes")
    return np.where(x >= 0, 1, -1).astype(np.int8)


def _require_field_free(m: IsingModel):
    if m.has_field:
        raise ValueError("CIM engine needs a field-free model; apply absorb_field first")


def feedback_field(m: IsingModel, spins, r: float) -> np.ndarray:
    """Injection ``f_i = r * sum_j J_ij s_j`` (descent direction of the Ising energy)."""
    _require_field_free(m)
    s = np.asarray(spins, dtype=np.float64)
    if s.shape != (m.n,):
        raise ValueError(f"expected {m.n} spins, got shape {s.shape}")
    return r * (m.to_dense() @ s)


def coupling_matrix(m: IsingModel, normalize: bool = True) -> np.ndarray:
    jd = m.to_dense()
    if normalize:
        scale = np.abs(jd).sum(axis=1).max() if m.n else 0.0
        if scale > 0:
            jd = jd / scale
    return jd


def _advance(x, jd, params: CimParams, t: int, xi):
    """One round for a ``(runs, n)`` amplitude block; ``xi`` is the standard-normal draw."""
    s = x if params.feedback == "analog" else np.where(x >= 0, 1.0, -1.0)
    f = params.r * (s @ jd)
    p = params.schedule.pump(t)
    drift = (p - 1.0) * x - params.sat * x**3 + f
    return x + params.dt * drift + params.noise_amp * np.sqrt(params.dt) * xi


def step(x, m: IsingModel, params: CimParams, t: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Advance a single amplitude vector by round ``t`` (0-based)."""
    _require_field_free(m)
    x = np.asarray(x, dtype=np.float64)
    xi = rng.standard_normal(m.n) if rng is not None and params.noise_amp > 0 else np.zeros(m.n)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _advance(x[None, :], coupling_matrix(m, params.normalize), params, t, xi[None, :])[0]
    if not np.all(np.isfinite(out)):
        raise NumericalDivergence(t + 1)
    return out


def _integrate(jd, params: CimParams, x0, draw, record: bool):
    x = x0
    history = np.empty((params.schedule.rounds, *x0.shape)) if record else None
    for t in range(params.schedule.rounds):
        with np.errstate(over="ignore", invalid="ignore"):
            x = _advance(x, jd, params, t, draw(t))
        if not np.all(np.isfinite(x)):
            raise NumericalDivergence(t + 1)
        if record:
            history[t] = x
    return x, history


def simulate(m: IsingModel, params: CimParams, target_energy: float | None = None,
             *, x0=None, noise=None) -> Trajectory:
    """Run one seeded trajectory.

    ``x0`` and ``noise`` (a ``(rounds, n)`` array of standard normals) override the
    seeded draws; omit them for the normal seeded run.
    """
    _require_field_free(m)
    n, rounds = m.n, params.schedule.rounds
    rng = np.random.default_rng(params.seed)
    if x0 is None:
        x0 = rng.normal(0.0, params.initial_std, n) if params.initial_std > 0 else np.zeros(n)
    if noise is None:
        noise = rng.standard_normal((rounds, n)) if params.noise_amp > 0 else np.zeros((rounds, n))
    noise = np.asarray(noise, dtype=np.float64)
    jd = coupling_matrix(m, params.normalize)
    _, hist = _integrate(jd, params, np.asarray(x0, dtype=np.float64)[None, :],
                         lambda t: noise[t][None, :], record=True)
    amps = hist[:, 0, :]
    spins = np.where(amps >= 0, 1, -1).astype(np.int8)
    energy = m.energies(spins)
    hit = None
    if target_energy is not None:
        reached = np.flatnonzero(energy <= target_energy + 1e-9 * max(1.0, abs(target_energy)))
        hit = int(reached[0]) + 1 if reached.size else None
    return Trajectory(amps, energy, spins[-1].copy(), hit)


def simulate_many(m: IsingModel, params: CimParams, seeds) -> np.ndarray:
    """Final readouts of independent runs, one per seed, integrated side by side.

    Run ``k`` uses exactly the draws of ``simulate`` with ``seed=seeds[k]``.
    """
    _require_field_free(m)
    n, rounds = m.n, params.schedule.rounds
    gens = [np.random.default_rng(s) for s in seeds]
    std = params.initial_std
    x0 = np.array([g.normal(0.0, std, n) if std > 0 else np.zeros(n) for g in gens]).reshape(len(gens), n)
    if params.noise_amp > 0:
        # draw per round from each run's stream; identical to one (rounds, n) block
        draw = lambda t: np.array([g.standard_normal(n) for g in gens]).reshape(len(gens), n)
    else:
        zeros = np.zeros((len(gens), n))
        draw = lambda t: zeros
    x, _ = _integrate(coupling_matrix(m, params.normalize), params, x0, draw, record=False)
    return np.where(x >= 0, 1, -1).astype(np.int8)


class CimSolver:
    """Solver handle for :mod:`cimsim.solvers`; models with a field go through an ancilla."""

    def __init__(self, params: CimParams | None = None):
        self.params = params or CimParams()
        self.__name__ = "cim"

    def _prepare(self, model: IsingModel):
        return (absorb_field(model), True) if model.has_field else (model, False)

    def __call__(self, model: IsingModel, seed: int):
        spins = self.solve_many(model, [seed])[0]
        return spins, float(model.energies(spins)[0])

    def solve_many(self, model: IsingModel, seeds) -> np.ndarray:
        work, ancilla = self._prepare(model)
        spins = simulate_many(work, self.params, seeds)
        return drop_ancilla(spins) if ancilla else spins


def run_batch(m: IsingModel, params: CimParams, target_energy: float, runs: int = 100,
              batches: int = 1, *, graph=None, problem_id: str = "") -> solvers.SuccessStats:
    """Success statistics of the CIM; per-run seeds derive from ``params.seed``."""
    return solvers.batch_stats(CimSolver(params), m, target_energy, runs, batches, params.seed,
                               graph=graph, problem_id=problem_id, solver="cim")


def with_seed(params: CimParams, seed: int) -> CimParams:
    return replace(params, seed=seed)

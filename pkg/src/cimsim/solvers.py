"""Reference solvers and the batch success-rate protocol.

A *solver handle* is any callable ``solve(model, seed) -> (spins, energy)``.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from numba import njit

from cimsim.ising import Graph, IsingModel, all_configs, cut_to_energy

MAX_EXACT_SPINS = 24

Solver = Callable[[IsingModel, int], "tuple[np.ndarray, float]"]


class ProblemTooLarge(ValueError):
    """Exhaustive search refused because the model is too large."""


def run_seed(base_seed: int, batch: int, run: int) -> int:
    """Stateless per-run seed derived from ``(base_seed, batch, run)``."""
    ss = np.random.SeedSequence([int(base_seed) & (2**64 - 1), int(batch), int(run)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _is_integral(model: IsingModel) -> bool:
    vals = [*model.couplings.values(), model.offset, *model.field_vector()]
    return all(float(v).is_integer() for v in vals)


def brute_force(model: IsingModel, max_optima: int = 64, chunk_bits: int = 16):
    """Exact minimum over all ``2**n`` configurations.

    Returns ``(min_energy, optima)`` where ``optima`` lists up to ``max_optima``
    minimizing configurations as int8 arrays.
    """
    n = model.n
    if n > MAX_EXACT_SPINS:
        raise ProblemTooLarge(f"brute force is limited to {MAX_EXACT_SPINS} spins, model has {n}")
    if n == 0:
        return model.offset, [np.zeros(0, dtype=np.int8)]
    jd = model.to_dense()
    h = model.field_vector()
    # without a field, H(s) = H(-s): enumerate half the space with the last spin +1
    symmetric = not model.has_field
    free = n - 1 if symmetric else n
    tol = 1e-9 * max(1.0, float(np.abs(jd).sum() + np.abs(h).sum()))

    best = math.inf
    optima: list[np.ndarray] = []
    step = 1 << min(chunk_bits, free)
    shifts = np.arange(free)
    for start in range(0, 1 << free, step):
        idx = np.arange(start, start + step, dtype=np.int64)[:, None]
        s = (1 - 2 * ((idx >> shifts) & 1)).astype(np.float64)
        if symmetric:
            s = np.hstack([s, np.ones((step, 1))])
        e = -0.5 * np.einsum("ki,ki->k", s @ jd, s) - s @ h + model.offset
        lo = e.min()
        if lo < best - tol:
            best, optima = lo, []
        if lo <= best + tol:
            for k in np.flatnonzero(e <= best + tol):
                if len(optima) >= max_optima:
                    break
                optima.append(s[k].astype(np.int8))
    if symmetric:
        mirrored = [-o for o in optima]
        optima = (optima + mirrored)[:max_optima]
    if _is_integral(model):
        best = float(round(best))
    return float(best), optima


def enumerate_energies(model: IsingModel) -> np.ndarray:
    """Energy of every configuration in :func:`all_configs` order (small n only)."""
    if model.n > 20:
        raise ProblemTooLarge("full energy table limited to 20 spins")
    return model.energies(all_configs(model.n))


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 1000
    t_start: float = 3.0
    t_end: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not self.t_start >= self.t_end > 0:
            raise ValueError("need t_start >= t_end > 0")

    def temperatures(self) -> np.ndarray:
        return np.geomspace(self.t_start, self.t_end, self.sweeps)

    @classmethod
    def scaled(cls, model: IsingModel, sweeps: int = 1000, seed: int = 0,
               hot: float = 2.0, cold: float = 0.02) -> "AnnealSchedule":
        """Temperatures proportional to the rms local field under random spins."""
        jd = model.to_dense()
        scale = float(np.sqrt(np.mean((jd**2).sum(axis=1) + model.field_vector() ** 2)))
        scale = scale or 1.0
        return cls(sweeps, hot * scale, cold * scale, seed)


@njit(cache=True)
def _metropolis(jd, h, spins, temps, uniforms):
    n = spins.size
    local = jd @ spins + h
    energy = 0.0
    best = spins.copy()
    best_energy = energy
    for s in range(temps.size):
        beta = 1.0 / temps[s]
        for i in range(n):
            de = 2.0 * spins[i] * local[i]
            if de <= 0.0 or uniforms[s, i] < math.exp(-beta * de):
                spins[i] = -spins[i]
                two_si = 2.0 * spins[i]
                for j in range(n):
                    local[j] += two_si * jd[j, i]
                energy += de
                if energy < best_energy - 1e-12:
                    best_energy = energy
                    best[:] = spins
    return best


def simulated_annealing(model: IsingModel, schedule: AnnealSchedule):
    """Single-spin-flip Metropolis over a geometric temperature ladder; best-seen state."""
    rng = np.random.default_rng(schedule.seed)
    spins = rng.choice(np.array([-1.0, 1.0]), size=model.n)
    uniforms = rng.random((schedule.sweeps, model.n))
    best = _metropolis(model.to_dense(), model.field_vector().astype(np.float64), spins,
                       schedule.temperatures(), uniforms)
    best = best.astype(np.int8)
    return best, float(model.energies(best)[0])


def sa_solver(sweeps: int = 1000, hot: float = 2.0, cold: float = 0.02) -> Solver:
    """Solver handle running SA with a schedule scaled to each model."""

    def solve(model: IsingModel, seed: int):
        return simulated_annealing(model, AnnealSchedule.scaled(model, sweeps, seed, hot, cold))

    solve.__name__ = f"sa[{sweeps}]"
    return solve


def exact_solver(model: IsingModel, seed: int = 0):
    energy, optima = brute_force(model, max_optima=1)
    return optima[0], energy


@dataclass
class SuccessStats:
    target: float
    runs_per_batch: int
    batches: int
    mean: float
    std: float
    batch_rates: list[float] = field(default_factory=list)
    histogram: list[dict] = field(default_factory=list)
    problem_id: str = ""
    solver: str = ""
    best: float | None = None
    objective: str = "energy"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SuccessStats":
        return cls(**json.loads(text))


def cut_threshold(gs_cut: float, fraction: float, integral: bool = True) -> float:
    """Smallest cut counted as success at ``fraction`` of the ground-state cut."""
    raw = fraction * gs_cut
    return float(math.ceil(raw - 1e-9)) if integral else raw


def threshold_energy(graph: Graph, gs_cut: float, fraction: float) -> float:
    integral = all(float(w).is_integer() for _, _, w in graph.edges)
    return float(cut_to_energy(graph, cut_threshold(gs_cut, fraction, integral)))


def _histogram(values: Iterable[float]) -> list[dict]:
    counts = Counter(round(float(v), 9) for v in values)
    return [{"value": v, "count": c} for v, c in sorted(counts.items())]


def collect_energies(solve: Solver, model: IsingModel, runs_per_batch: int = 100, batches: int = 1,
                     base_seed: int = 0, map_fn=map) -> np.ndarray:
    """Final energies of seeded runs as a ``(batches, runs_per_batch)`` array.

    ``map_fn`` may be an executor's ``map``; results stay ordered by index. A
    solver exposing ``solve_many(model, seeds)`` is called once per batch.
    """
    jobs = [(b, r) for b in range(batches) for r in range(runs_per_batch)]
    many = getattr(solve, "solve_many", None)
    if many is not None:
        # vectorized solvers integrate a whole batch at once, still one seed per run
        energies = np.concatenate([
            model.energies(many(model, [run_seed(base_seed, b, r) for r in range(runs_per_batch)]))
            for b in range(batches)
        ])
    else:
        results = list(map_fn(lambda br: solve(model, run_seed(base_seed, *br)), jobs))
        energies = np.array([e for _, e in results], dtype=np.float64)
    if _is_integral(model):
        energies = np.round(energies)
    return energies.reshape(batches, runs_per_batch)


def summarize(energies: np.ndarray, target: float, *, graph: Graph | None = None,
              problem_id: str = "", solver: str = "") -> SuccessStats:
    """Success statistics of a ``(batches, runs)`` energy array against ``target``.

    With ``graph`` the histogram and ``best`` are reported in cut values.
    """
    energies = np.atleast_2d(energies)
    batches, runs = energies.shape
    tol = 1e-9 * max(1.0, abs(target))
    rates = (energies <= target + tol).mean(axis=1)
    std = float(rates.std(ddof=1)) if batches > 1 else 0.0
    flat = energies.ravel()
    if graph is not None:
        objective, values = "cut", (graph.total_weight - flat) / 2
        best = float(values.max())
    else:
        objective, values = "energy", flat
        best = float(values.min())
    return SuccessStats(
        target=float(target),
        runs_per_batch=runs,
        batches=batches,
        mean=float(rates.mean()),
        std=std,
        batch_rates=[float(x) for x in rates],
        histogram=_histogram(values),
        problem_id=problem_id,
        solver=solver,
        best=best,
        objective=objective,
    )


def batch_stats(solve: Solver, model: IsingModel, target: float, runs_per_batch: int = 100,
                batches: int = 1, base_seed: int = 0, *, graph: Graph | None = None,
                problem_id: str = "", solver: str = "", map_fn=map) -> SuccessStats:
    """Success rate of ``solve`` reaching ``target`` energy over seeded batches of runs."""
    energies = collect_energies(solve, model, runs_per_batch, batches, base_seed, map_fn)
    return summarize(energies, target, graph=graph, problem_id=problem_id,
                     solver=solver or getattr(solve, "__name__", "solver"))

"""Molecular-docking pose sampling as a QUBO over atom/grid-point matches.

Variable ``x[i*N + j] = 1`` matches ligand atom ``i`` to grid point ``j``. The
objective is ``sum w_ij x_ij`` plus, for every pair of variables taken once in
lexicographic order,

* ``K_mono`` when the two matches share an atom or share a grid point,
* ``K_dist`` when they involve distinct atoms and distinct grid points whose
  separations disagree by more than ``eps_dist``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cimsim.ising import QuboModel


@dataclass(frozen=True, eq=False)
class DockingInstance:
    atoms: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    eps_dist: float = 0.1
    k_dist: float | None = None
    k_mono: float | None = None
    atom_labels: tuple[str, ...] = ()
    grid_labels: tuple[str, ...] = ()

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.float64).reshape(-1, 3)
        grid = np.asarray(self.grid, dtype=np.float64).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=np.float64)
        n, N = len(atoms), len(grid)
        if n < 1:
            raise ValueError("need at least one atom")
        if N < n:
            raise ValueError(f"need at least as many grid points ({N}) as atoms ({n})")
        if w.shape != (n, N):
            raise ValueError(f"weights must have shape ({n}, {N}), got {w.shape}")
        if not self.eps_dist > 0:
            raise ValueError("eps_dist must be positive")
        floor = np.abs(w).max() * n
        # penalties above max|w| * n keep one-to-one matchings optimal
        k_dist = 2 * floor + 1 if self.k_dist is None else float(self.k_dist)
        k_mono = 2 * floor + 1 if self.k_mono is None else float(self.k_mono)
        if not (k_dist > floor and k_mono > floor):
            raise ValueError(f"penalties must exceed max|w| * n = {floor:g}")
        for name, value in (("atoms", atoms), ("grid", grid), ("weights", w)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "k_dist", k_dist)
        object.__setattr__(self, "k_mono", k_mono)

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def N(self) -> int:
        return len(self.grid)

    def var(self, i: int, j: int) -> int:
        return i * self.N + j

    def distance_compatible(self, i: int, j: int, k: int, l: int) -> bool:
        da = np.linalg.norm(self.atoms[i] - self.atoms[k])
        dg = np.linalg.norm(self.grid[j] - self.grid[l])
        return abs(da - dg) <= self.eps_dist


@dataclass(frozen=True)
class Pose:
    assignment: tuple[int, ...]
    coordinates: np.ndarray = field(repr=False, compare=False)


@dataclass
class ConstraintReport:
    unmatched_atoms: list[int] = field(default_factory=list)
    multi_grid_atoms: list[int] = field(default_factory=list)
    shared_grid_points: list[int] = field(default_factory=list)
    distance_violations: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.unmatched_atoms or self.multi_grid_atoms
                    or self.shared_grid_points or self.distance_violations)


def docking_qubo(inst: DockingInstance) -> QuboModel:
    n, N = inst.n, inst.N
    da = np.linalg.norm(inst.atoms[:, None] - inst.atoms[None], axis=-1)
    dg = np.linalg.norm(inst.grid[:, None] - inst.grid[None], axis=-1)
    quad: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(N):
            a = i * N + j
            for k in range(i, n):
                for l in range(N):
                    b = k * N + l
                    if b <= a:
                        continue
                    if i == k or j == l:
                        quad[(a, b)] = inst.k_mono
                    elif abs(da[i, k] - dg[j, l]) > inst.eps_dist:
                        quad[(a, b)] = inst.k_dist
    return QuboModel(n * N, inst.weights.ravel(), quad)


def decode_pose(x, inst: DockingInstance) -> Pose | ConstraintReport:
    """Interpret a bit vector as a pose, or report every violated constraint."""
    bits = np.asarray(x).reshape(inst.n, inst.N)
    report = ConstraintReport()
    row_counts, col_counts = bits.sum(axis=1), bits.sum(axis=0)
    report.unmatched_atoms = [int(i) for i in np.flatnonzero(row_counts == 0)]
    report.multi_grid_atoms = [int(i) for i in np.flatnonzero(row_counts > 1)]
    report.shared_grid_points = [int(j) for j in np.flatnonzero(col_counts > 1)]
    matches = [(int(i), int(j)) for i, j in zip(*np.nonzero(bits))]
    for a, (i, j) in enumerate(matches):
        for k, l in matches[a + 1:]:
            if i != k and j != l and not inst.distance_compatible(i, j, k, l):
                report.distance_violations.append(((i, j), (k, l)))
    if not report.ok:
        return report
    assignment = tuple(int(np.flatnonzero(bits[i])[0]) for i in range(inst.n))
    return Pose(assignment, inst.grid[list(assignment)])


def pose_bits(pose: Pose, inst: DockingInstance) -> np.ndarray:
    x = np.zeros(inst.n * inst.N, dtype=np.int8)
    for i, j in enumerate(pose.assignment):
        x[inst.var(i, j)] = 1
    return x


def rmsd(pose, crystal) -> float:
    """Index-matched root-mean-square deviation in the input units (no superposition)."""
    a = np.asarray(pose.coordinates if isinstance(pose, Pose) else pose, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(crystal, dtype=np.float64).reshape(-1, 3)
    if a.shape != b.shape:
        raise ValueError(f"atom count mismatch: {len(a)} vs {len(b)}")
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))


ACCEPTABLE_RMSD = 2.0


def mrmsd(poses, crystal) -> tuple[float, bool]:
    """Minimum RMSD over sampled poses and whether it is below 2 angstrom."""
    poses = list(poses)
    if not poses:
        raise ValueError("mrmsd needs at least one pose")
    best = min(rmsd(p, crystal) for p in poses)
    return best, best < ACCEPTABLE_RMSD


def mrmsd_report(results: dict[str, float]) -> list[dict]:
    """Rows ``{system, mrmsd, acceptable}`` in the layout of a per-system summary table."""
    return [{"system": k, "mrmsd": float(v), "acceptable": bool(v < ACCEPTABLE_RMSD)}
            for k, v in results.items()]


def read_points(path) -> tuple[np.ndarray, tuple[str, ...]]:
    """Parse ``x y z [label]`` lines."""
    coords, labels = [], []
    for raw in Path(path).read_text().splitlines():
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        if len(tok) not in (3, 4):
            raise ValueError(f"bad point line: {raw!r}")
        coords.append([float(v) for v in tok[:3]])
        labels.append(tok[3] if len(tok) == 4 else "")
    return np.array(coords).reshape(-1, 3), tuple(labels)


def write_points(path, coords, labels=()) -> None:
    lines = []
    for k, c in enumerate(np.asarray(coords)):
        label = f" {labels[k]}" if labels and labels[k] else ""
        lines.append(" ".join(repr(float(v)) for v in c) + label)
    Path(path).write_text("\n".join(lines) + "\n")


def label_weights(atom_labels, grid_labels, match: float = -1.0, mismatch: float = 0.0) -> np.ndarray:
    return np.array([[match if a == g else mismatch for g in grid_labels] for a in atom_labels])


def load_instance(atoms_path, grid_path, params_path) -> DockingInstance:
    """Assemble an instance from two point files and a JSON parameter block.

    ``w`` is ``"uniform:<value>"``, ``"labels:<match>,<mismatch>"`` or a path to a
    whitespace matrix file (relative paths resolve against the JSON file).
    """
    atoms, alabels = read_points(atoms_path)
    grid, glabels = read_points(grid_path)
    params = json.loads(Path(params_path).read_text())
    spec = str(params.get("w", "uniform:-1"))
    if spec.startswith("uniform:"):
        w = np.full((len(atoms), len(grid)), float(spec.split(":", 1)[1]))
    elif spec.startswith("labels:"):
        match, mismatch = (float(v) for v in spec.split(":", 1)[1].split(","))
        w = label_weights(alabels, glabels, match, mismatch)
    else:
        wpath = Path(spec)
        if not wpath.is_absolute():
            wpath = Path(params_path).parent / wpath
        w = np.loadtxt(wpath, ndmin=2)
    return DockingInstance(atoms, grid, w, float(params.get("eps_dist", 0.1)),
                           params.get("K_dist"), params.get("K_mono"), alabels, glabels)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def synthetic_instance(n_atoms: int, n_grid: int, seed: int = 0, box: float = 6.0,
                       eps_dist: float = 0.05) -> tuple[DockingInstance, np.ndarray]:
    """A small instance whose grid contains the crystal coordinates.

    Atoms are a rigidly moved copy of the crystal pose; the remaining grid points
    are decoys carrying atom labels. Scoring rewards label agreement.
    Returns ``(instance, crystal_coordinates)``.
    """
    if n_grid < n_atoms:
        raise ValueError("grid must have at least as many points as atoms")
    rng = np.random.default_rng(seed)
    crystal = rng.uniform(0, box, size=(n_atoms, 3))
    labels = tuple(f"A{i}" for i in range(n_atoms))
    moved = crystal @ _random_rotation(rng).T + rng.normal(scale=5.0, size=3)
    decoys = rng.uniform(0, box, size=(n_grid - n_atoms, 3))
    decoy_labels = tuple(labels[k] for k in rng.integers(0, n_atoms, size=n_grid - n_atoms)) if n_atoms > 1 \
        else tuple("X" for _ in range(n_grid - n_atoms))
    order = rng.permutation(n_grid)
    grid = np.vstack([crystal, decoys])[order]
    glabels = tuple((labels + decoy_labels)[k] for k in order)
    w = label_weights(labels, glabels)
    return DockingInstance(moved, grid, w, eps_dist, atom_labels=labels, grid_labels=glabels), crystal

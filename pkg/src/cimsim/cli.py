"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 capability refusal, 4 numerical failure.
Every command writes a ``<output>.manifest.json`` that ``cimsim replay`` re-runs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from cimsim import __version__
from cimsim import dopo, engine, io, solvers
from cimsim.apps import docking, features
from cimsim.graphs import MobiusSpec, RandomGraphSpec, density, mobius_ladder, mobius_maxcut, random_graph
from cimsim.ising import Graph, IsingModel, QuboModel, absorb_field, drop_ancilla, maxcut_to_ising, qubo_to_ising

EXIT_INPUT, EXIT_REFUSED, EXIT_NUMERIC = 2, 3, 4

CIM_FLAGS = {
    "rounds": ("rounds", int),
    "pump_start": ("pump_start", float),
    "pump_end": ("pump_end", float),
    "r": ("r", float),
    "noise": ("noise_amp", float),
    "dt": ("dt", float),
    "sat": ("sat", float),
    "x0_std": ("x0_std", float),
    "feedback": ("feedback", str),
}


class InputError(ValueError):
    pass


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _emit(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _write_manifest(args, argv, inputs, outputs, seeds) -> None:
    primary = Path(outputs[0])
    target = Path(str(primary) + ".manifest.json") if not primary.is_dir() else primary / "manifest.json"
    params = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "params": params,
        "seeds": seeds,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _emit(target, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _sweep(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list."""
    if ":" not in text:
        return _floats(text)
    start, stop, step = (float(v) for v in text.split(":"))
    if step <= 0 or stop < start:
        raise InputError("alpha sweep needs start <= stop and step > 0")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def _merge_config(args) -> None:
    """Fill flags not given on the command line from ``--config``."""
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        cfg = engine.load_params(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        dest = "noise" if dest == "noise_amp" else dest
        if dest in vars(args) and getattr(args, dest) is None:
            setattr(args, dest, value)


def _cim_params(args) -> engine.CimParams:
    flat = {}
    for flag, (key, cast) in CIM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            flat[key] = cast(value)
    flat["seed"] = int(args.seed or 0)
    return engine.CimParams.from_dict(flat)


def _load_model(path) -> tuple[IsingModel, Graph | None, QuboModel | None]:
    try:
        problem = io.load_problem(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    if isinstance(problem, Graph):
        return maxcut_to_ising(problem), problem, None
    if isinstance(problem, QuboModel):
        return qubo_to_ising(problem), None, problem
    return problem, None, None


# -- gen-graph ---------------------------------------------------------------

def cmd_gen_graph(args, argv) -> int:
    if args.kind == "mobius":
        g = mobius_ladder(MobiusSpec(args.v))
        seeds = {}
    else:
        if args.density is None:
            raise InputError("random graphs need --density")
        g = random_graph(RandomGraphSpec(args.v, float(args.density), int(args.seed or 0)))
        seeds = {"graph": int(args.seed or 0)}
    if args.out is None:
        args.out = (f"mobius{args.v}.txt" if args.kind == "mobius"
                    else f"random{args.v}_d{args.density:g}_s{args.seed or 0}.txt")
    _emit(args.out, io.dumps_graph(g))
    print(f"wrote {g.n} vertices, {g.m} edges, density {density(g):.4f}", file=sys.stderr)
    _write_manifest(args, argv, [], [args.out], seeds)
    return 0


# -- solve -------------------------------------------------------------------

def cmd_solve(args, argv) -> int:
    model, graph, qubo = _load_model(args.problem)
    seed = int(args.seed or 0)
    result: dict = {"engine": args.engine}
    trajectory = None
    if args.engine == "exact":
        energy, optima = solvers.brute_force(model, max_optima=1)
        spins = optima[0]
    elif args.engine == "sa":
        sched = solvers.AnnealSchedule.scaled(model, int(args.sweeps or 1000), seed)
        spins, energy = solvers.simulated_annealing(model, sched)
    else:
        params = _cim_params(args)
        work = absorb_field(model) if model.has_field else model
        target = float(args.target) if args.target is not None else None
        trajectory = engine.simulate(work, params, target if work is model else None)
        spins = drop_ancilla(trajectory.final) if work is not model else trajectory.final
        energy = float(model.energies(spins)[0])
        result["rounds_to_target"] = trajectory.rounds_to_target
        result["params"] = params.to_dict()
    spins = np.asarray(spins, dtype=int)
    result["best_config"] = spins.tolist()
    result["best_energy"] = float(energy)
    if graph is not None:
        result["best_cut"] = float((graph.total_weight - energy) / 2)
    if qubo is not None:
        x = ((spins + 1) // 2).tolist()
        result["best_x"] = x
        result["best_value"] = float(qubo.values(np.array(x))[0])
    if args.target is not None:
        result["target"] = float(args.target)
        result["reached"] = bool(energy <= float(args.target) + 1e-9)
    _emit(args.out, json.dumps(result, sort_keys=True) + "\n")
    outputs = [args.out]
    if args.trajectory and trajectory is not None:
        _emit(args.trajectory, trajectory.to_csv())
        outputs.append(args.trajectory)
    _write_manifest(args, argv, [args.problem], outputs, {"run": seed})
    return 0


# -- bench -------------------------------------------------------------------

def reference_optima() -> dict:
    """Checked-in reference optima keyed by problem name."""
    text = resources.files("cimsim").joinpath("data/reference_optima.json").read_text()
    data = json.loads(text)
    return {**data["mobius"], **data["random"]}


def _reference_cut(name: str, graph: Graph, refs: dict) -> float:
    """Reference optimum by name, then by structure, then by brute force."""
    if name in refs:
        return float(refs[name]["max_cut"])
    if graph.n >= 4 and graph.n % 2 == 0 and graph == mobius_ladder(graph.n):
        return float(mobius_maxcut(graph.n))
    for entry in refs.values():
        if "seed" in entry and entry.get("vertices") == graph.n and entry.get("edges") == graph.m:
            spec = RandomGraphSpec(entry["vertices"], entry["target_density"], entry["seed"])
            if random_graph(spec) == graph:
                return float(entry["max_cut"])
    if graph.n <= solvers.MAX_EXACT_SPINS:
        energy, _ = solvers.brute_force(maxcut_to_ising(graph), max_optima=1)
        return float((graph.total_weight - energy) / 2)
    raise InputError(f"no reference optimum for '{name}'; supply --reference")


def _trend(means: list[float], stds: list[float]) -> dict:
    """Non-increasing check tolerating one adjacent inversion within one std."""
    inversions = [k for k in range(len(means) - 1) if means[k + 1] > means[k]]
    tolerated = len(inversions) <= 1 and all(
        means[k + 1] - means[k] <= max(stds[k], stds[k + 1]) for k in inversions)
    return {"means": means, "inversions": inversions, "non_increasing": not inversions, "accepted": tolerated}


def cmd_bench(args, argv) -> int:
    refs = reference_optima()
    if args.reference:
        refs.update(json.loads(Path(args.reference).read_text()))
    thresholds = _floats(args.thresholds)
    if any(not 0 < t <= 1 for t in thresholds):
        raise InputError("thresholds must lie in (0, 1]")
    runs, batches, seed = int(args.runs), int(args.batches), int(args.seed or 0)
    if args.engine == "cim":
        solve = engine.CimSolver(_cim_params(args))
    elif args.engine == "sa":
        solve = solvers.sa_solver(int(args.sweeps or 1000))
    else:
        solve = solvers.exact_solver
    reports, per_threshold = [], {t: ([], []) for t in thresholds}
    for path in args.problems:
        model, graph, _ = _load_model(path)
        if graph is None:
            raise InputError(f"{path}: bench expects edge-list (Max-Cut) problems")
        name = Path(path).stem
        gs_cut = _reference_cut(name, graph, refs)
        energies = solvers.collect_energies(solve, model, runs, batches, seed)
        for t in thresholds:
            stats = solvers.summarize(energies, solvers.threshold_energy(graph, gs_cut, t), graph=graph,
                                      problem_id=name, solver=args.engine)
            row = json.loads(stats.to_json())
            row.update(threshold=t, reference_cut=gs_cut,
                       threshold_cut=solvers.cut_threshold(gs_cut, t))
            reports.append(row)
            per_threshold[t][0].append(stats.mean)
            per_threshold[t][1].append(stats.std)
            print(f"{name} @ {t:g}: mean {stats.mean:.3f} std {stats.std:.3f}", file=sys.stderr)
    if args.format == "csv":
        cols = ["problem_id", "threshold", "threshold_cut", "reference_cut", "mean", "std", "best"]
        lines = [",".join(cols)] + [",".join(str(row[c]) for c in cols) for row in reports]
        _emit(args.out, "\n".join(lines) + "\n")
    else:
        trend = {str(t): _trend(m, s) for t, (m, s) in per_threshold.items()} if len(args.problems) > 1 else {}
        _emit(args.out, json.dumps({"results": reports, "trend": trend}, indent=2, sort_keys=True) + "\n")
    _write_manifest(args, argv, args.problems, [args.out], {"base_seed": seed})
    return 0


# -- wigner ------------------------------------------------------------------

def cmd_wigner(args, argv) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for S in _floats(args.S):
        params = dopo.DopoParams(S, float(args.gamma_s), float(args.B))
        state = dopo.steady_state(params, int(args.n_max))
        meta = {"S": S, "gamma_s": params.gamma_s, "B": params.B, "n_max": int(args.n_max),
                "photon_number": dopo.photon_number(state)}
        grid = dopo.wigner(state, args.x_max, int(args.points), meta=meta)
        stem = out_dir / f"wigner_S{S:g}"
        _emit(str(stem) + ".csv", grid.to_csv())
        _emit(str(stem) + ".json", grid.sidecar() + "\n")
        summary.append({**meta, "lobe_separation": dopo.lobe_separation(grid),
                        "normalization_residual": abs(grid.normalization - 1), "grid_ok": grid.grid_ok})
        print(f"S={S:g}: <n>={meta['photon_number']:.4f} separation={summary[-1]['lobe_separation']:.4f}",
              file=sys.stderr)
    _emit(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_manifest(args, argv, [], [out_dir], {})
    return 0


# -- apps --------------------------------------------------------------------

def _read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path}: need a header and at least one row")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric cell ({exc})") from exc
    return rows[0], data


def _column(header, name) -> int:
    if name not in header:
        raise InputError(f"column '{name}' not in header {header}")
    return header.index(name)


def cmd_apps(args, argv) -> int:
    inputs = []
    if args.app == "dock-qubo":
        inst = docking.load_instance(args.atoms, args.grid, args.params)
        _emit(args.out, io.dumps_qubo(docking.docking_qubo(inst)))
        inputs = [args.atoms, args.grid, args.params]
    elif args.app == "fs-qubo":
        header, data = _read_table(args.csv)
        li = _column(header, args.label)
        feats = [k for k in range(len(header)) if k != li]
        X, y = data[:, feats], data[:, li]
        inputs = [args.csv]
        if args.alpha_sweep:
            rows = features.alpha_sweep(X, y, _sweep(args.alpha_sweep), int(args.sweeps or 2000),
                                        int(args.seed or 0))
            for row in rows:
                row["selected_names"] = [header[feats[k]] for k in row["selected"]]
            _emit(args.out, json.dumps({"sweep": rows}, indent=2, sort_keys=True) + "\n")
        else:
            alpha = float(args.alpha if args.alpha is not None else 0.5)
            rho_v, rho = features.pearson_matrix(X, y)
            inst = features.FeatureSelectionInstance(rho_v, rho, alpha)
            mask, value = features.select_features(inst, int(args.sweeps or 2000), int(args.seed or 0))
            sel = [int(k) for k in np.flatnonzero(mask)]
            doc = {"alpha": alpha, "selected": sel, "selected_names": [header[feats[k]] for k in sel],
                   "objective": value}
            _emit(args.out, json.dumps(doc, sort_keys=True) + "\n")
            if args.qubo_out:
                _emit(args.qubo_out, io.dumps_qubo(features.feature_selection_qubo(inst)))
    else:
        header, data = _read_table(args.csv)
        inputs = [args.csv]
        if args.columns:
            a, b = (data[:, _column(header, c)] for c in args.columns)
            doc = {"columns": args.columns}
        else:
            if not (args.score and args.label):
                raise InputError("ks needs --columns A B or --score S --label L")
            s, y = data[:, _column(header, args.score)], data[:, _column(header, args.label)]
            classes = np.unique(y)
            if classes.size != 2:
                raise InputError("label column must hold exactly two classes")
            a, b = s[y == classes[0]], s[y == classes[1]]
            doc = {"score": args.score, "label": args.label, "classes": classes.tolist()}
        doc.update(ks=features.ks_statistic(a, b), n_a=int(a.size), n_b=int(b.size))
        _emit(args.out, json.dumps(doc, sort_keys=True) + "\n")
    _write_manifest(args, argv, inputs, [args.out], {"seed": args.seed} if args.seed is not None else {})
    return 0


def cmd_replay(args, argv) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    return main(manifest["argv"])


# -- parser ------------------------------------------------------------------

def _add_cim_flags(p) -> None:
    g = p.add_argument_group("CIM parameters")
    g.add_argument("--rounds", type=int)
    g.add_argument("--pump-start", type=float)
    g.add_argument("--pump-end", type=float)
    g.add_argument("--r", type=float, help="feedback gain")
    g.add_argument("--noise", type=float, help="per-round noise amplitude")
    g.add_argument("--dt", type=float)
    g.add_argument("--sat", type=float)
    g.add_argument("--x0-std", type=float)
    g.add_argument("--feedback", choices=["binary", "analog"])
    p.add_argument("--sweeps", type=int, help="SA sweeps")
    p.add_argument("--config", help="JSON or key=value file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cimsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="generate a Mobius ladder or random graph")
    p.add_argument("kind", choices=["mobius", "random"])
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--density", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="edge-list path (default: named after the parameters)")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("solve", help="solve one problem file")
    p.add_argument("problem")
    p.add_argument("--engine", choices=["cim", "sa", "exact"], default="cim")
    p.add_argument("--seed", type=int)
    p.add_argument("--target", type=float, help="target energy")
    p.add_argument("--out", required=True)
    p.add_argument("--trajectory", help="CSV path for the CIM trajectory")
    _add_cim_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="batch success rates against reference optima")
    p.add_argument("problems", nargs="+")
    p.add_argument("--engine", choices=["cim", "sa", "exact"], default="cim")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--batches", type=int, default=1)
    p.add_argument("--thresholds", default="1.0,0.98,0.95")
    p.add_argument("--reference", help="JSON {name: {max_cut: value}}")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    _add_cim_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("wigner", help="steady-state Wigner functions of a single DOPO")
    p.add_argument("--S", default="1,1.25,1.5,2")
    p.add_argument("--B", type=float, default=0.2)
    p.add_argument("--gamma-s", type=float, default=1.0)
    p.add_argument("--n-max", type=int, default=60)
    p.add_argument("--x-max", type=float, default=8.0)
    p.add_argument("--points", type=int, default=161)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("apps", help="application QUBO builders and KS")
    asub = p.add_subparsers(dest="app", required=True)
    q = asub.add_parser("dock-qubo")
    q.add_argument("--atoms", required=True)
    q.add_argument("--grid", required=True)
    q.add_argument("--params", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_apps, seed=None)
    q = asub.add_parser("fs-qubo")
    q.add_argument("--csv", required=True)
    q.add_argument("--label", required=True)
    q.add_argument("--alpha", type=float)
    q.add_argument("--alpha-sweep", help="start:stop:step or comma list")
    q.add_argument("--sweeps", type=int)
    q.add_argument("--seed", type=int)
    q.add_argument("--qubo-out")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_apps)
    q = asub.add_parser("ks")
    q.add_argument("--csv", required=True)
    q.add_argument("--columns", nargs=2)
    q.add_argument("--score")
    q.add_argument("--label")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_apps, seed=None)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        _merge_config(args)
        return args.func(args, argv)
    except solvers.ProblemTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (engine.NumericalDivergence, dopo.TruncationError, dopo.SteadyStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Regenerate src/cimsim/data/reference_optima.json.

Mobius ladders: exact transfer-matrix optimum, cross-checked by brute force
(V <= 24) and by the best of long simulated-annealing restarts.
Random graphs: best cut over long SA restarts; ``hits`` records how many
restarts reached it (consensus).

    python tools/derive_reference_optima.py [--restarts 40] [--sweeps 20000]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from cimsim.graphs import RandomGraphSpec, density, mobius_ladder, mobius_maxcut, random_graph
from cimsim.ising import cut_values, maxcut_to_ising
from cimsim.solvers import AnnealSchedule, brute_force, run_seed, simulated_annealing

OUT = Path(__file__).resolve().parents[1] / "src" / "cimsim" / "data" / "reference_optima.json"

RANDOM = [
    ("rand100_d0.017", 0.017),
    ("rand100_d0.196", 0.196),
    ("rand100_d0.398", 0.398),
    ("rand100_d0.605", 0.605),
    ("rand100_d0.785", 0.785),
    ("rand100_d0.989", 0.989),
    ("rand100_m700", 700 / 4950),
]
SEED = 7


def sa_best(g, restarts, sweeps):
    m = maxcut_to_ising(g)
    cuts = []
    for k in range(restarts):
        spins, _ = simulated_annealing(m, AnnealSchedule.scaled(m, sweeps, run_seed(2024, 0, k)))
        cuts.append(float(cut_values(g, spins)[0]))
    best = max(cuts)
    return best, sum(c == best for c in cuts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--restarts", type=int, default=40)
    ap.add_argument("--sweeps", type=int, default=20000)
    args = ap.parse_args()

    mobius = {}
    for v in (8, 12, 16, 20, 24):
        g = mobius_ladder(v)
        e, _ = brute_force(maxcut_to_ising(g), max_optima=1)
        assert (g.total_weight - e) / 2 == mobius_maxcut(v), v
    for v in (20, 40, 60, 80, 100):
        g = mobius_ladder(v)
        exact = mobius_maxcut(v)
        sa, hits = sa_best(g, args.restarts, args.sweeps)
        assert sa <= exact
        mobius[f"mobius{v}"] = {"vertices": v, "edges": g.m, "max_cut": exact,
                                "method": "transfer-matrix exact", "sa_best": sa, "sa_hits": hits}
        print(f"mobius{v}", exact, sa, hits)

    random = {}
    for name, d in RANDOM:
        g = random_graph(RandomGraphSpec(100, d, SEED))
        best, hits = sa_best(g, args.restarts, args.sweeps)
        random[name] = {"vertices": 100, "target_density": d, "seed": SEED, "edges": g.m,
                        "density": density(g), "max_cut": best, "method": "SA consensus",
                        "restarts": args.restarts, "sweeps": args.sweeps, "hits": hits}
        print(name, g.m, best, hits)

    OUT.write_text(json.dumps({"mobius": mobius, "random": random}, indent=2) + "\n")


if __name__ == "__main__":
    main()

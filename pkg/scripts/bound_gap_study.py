"""How tight are the three bounds the solver reports?

For a seeded batch of random instances this script solves each one to proven
optimality and tabulates the optimum against the root LP value, the converged
Lagrangian bound, and the unbounded-cap flow relaxation.  The last column
notes instances whose root relaxation was already integral (solved without
branching).

Usage:
    python3 scripts/bound_gap_study.py --n 60 --pdps 10 --ndds 2 --seed 0
"""

import argparse
import time

import numpy as np

from kepsolver.bnp import solve
from kepsolver.instances import generate_random


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--pdps", type=int, default=10)
    ap.add_argument("--ndds", type=int, default=2)
    ap.add_argument("--density", type=float, default=0.35)
    ap.add_argument("--K", type=int, default=3)
    ap.add_argument("--L", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    header = (f"{'seed':>6} {'opt':>7} {'root lp':>8} {'lagr':>8} "
              f"{'flow':>8} {'nodes':>6}  root")
    print(header)
    print("-" * len(header))
    t0 = time.monotonic()
    for i in range(args.n):
        seed = args.seed + i
        inst = generate_random(args.pdps, args.ndds, args.density,
                               weight_mode="uniform-int(1,10)", seed=seed,
                               K=args.K, L=args.L)
        sol = solve(inst)
        assert sol.status == "optimal", (seed, sol.status)
        root = sol.stats["root"]
        flow = sol.stats["infinite_relaxation_bound"]
        nodes = sol.stats["nodes"]
        integral = "integral" if nodes == 1 else ""
        rows.append((sol.objective, root["lp_bound"],
                     root["lagrangian_bound"], flow, nodes))
        print(f"{seed:>6} {sol.objective:>7.1f} {root['lp_bound']:>8.2f} "
              f"{root['lagrangian_bound']:>8.2f} {flow:>8.2f} "
              f"{nodes:>6d}  {integral}")
    elapsed = time.monotonic() - t0

    arr = np.array(rows)
    opt, lp, lagr, flow, nodes = (arr[:, j] for j in range(5))
    rel = lambda num, den: np.mean((num - den) / np.maximum(den, 1.0))
    print()
    print(f"instances            {args.n}  ({elapsed:.1f}s)")
    print(f"root already integral {int(np.sum(nodes == 1))}")
    print(f"mean gap lp   vs opt  {rel(lp, opt):8.4f}")
    print(f"mean gap lagr vs opt  {rel(lagr, opt):8.4f}")
    print(f"mean gap flow vs opt  {rel(flow, opt):8.4f}")
    print(f"max branch nodes      {int(nodes.max())}")


if __name__ == "__main__":
    main()

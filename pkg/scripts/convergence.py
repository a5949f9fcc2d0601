"""Mean best-so-far curves of the three optimizers on one image.

Prints a CSV of (evaluations, mean best fitness) per algorithm, sampled on a
common evaluation grid, for quick plotting elsewhere.
"""

import argparse

import numpy as np

from ficsthresh.harness import default_config, derive_seed
from ficsthresh.imaging import compute_histogram, load_image
from ficsthresh.objective import build_context
from ficsthresh.optimizer import ALGORITHMS, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--image", required=True)
    ap.add_argument("--levels", type=int, default=7)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=40)
    args = ap.parse_args()

    ctx = build_context(compute_histogram(load_image(args.image)))
    budget = default_config("FICS", args.levels).max_fes
    grid = np.linspace(30, budget, args.points).astype(int)
    curves = {}
    for ai, alg in enumerate(ALGORITHMS):
        rows = []
        for r in range(args.runs):
            rec = run(default_config(alg, args.levels, derive_seed(args.seed, 0, args.levels, ai, r)), ctx)
            fes, best = zip(*rec.trajectory)
            idx = np.searchsorted(fes, grid, side="right") - 1
            rows.append(np.asarray(best)[np.clip(idx, 0, None)])
        curves[alg] = np.mean(rows, axis=0)
    print("evaluations," + ",".join(ALGORITHMS))
    for i, n in enumerate(grid):
        print(f"{n}," + ",".join(f"{curves[a][i]:.6f}" for a in ALGORITHMS))


if __name__ == "__main__":
    main()

"""Full comparison protocol on the synthetic images.

Runs CS, FICS and FIPSO for M in {3, 7, 11, 15}, 30 seeded runs per cell,
writes the result tables and prints the win/tie/loss tally of FICS against
each competitor plus the Friedman mean ranks per M.
"""

import argparse
import time
from collections import Counter

from ficsthresh.harness import emit_tables, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/desk.cfg")
    ap.add_argument("--runs", type=int, help="override the configured run count")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.runs:
        cfg.runs = args.runs
    if args.workers:
        cfg.workers = args.workers
    t0 = time.perf_counter()
    analysis = run_experiment(cfg)
    emit_tables(analysis, cfg.out)
    print(f"finished {len(analysis.cells)} cells in {time.perf_counter() - t0:.1f}s -> {cfg.out}")

    tally = {}
    for (_, _, alg), v in analysis.verdicts.items():
        tally.setdefault(alg, Counter())[v.h] += 1
    for alg, c in tally.items():
        print(f"{analysis.control} vs {alg}: W/T/L = {c['+']}/{c['=']}/{c['-']}")
    for m, (ranks, chi2) in analysis.ranks.items():
        cols = "  ".join(f"{a}={r:.2f}" for a, r in ranks.items())
        extra = "" if chi2 is None else f"  chi2={chi2:.3f}"
        print(f"M={m:>2}  {cols}{extra}")


if __name__ == "__main__":
    main()

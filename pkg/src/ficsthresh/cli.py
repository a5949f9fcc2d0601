"""Command line entry point: ``run``, ``segment``, ``oracle`` and ``stats``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .harness import (
    ConfigError,
    ImageLoadError,
    analyze,
    default_config,
    emit_tables,
    load_config,
    load_runs,
    objective_rows,
    rank_rows,
    run_experiment,
)
from .imaging import PGMError, compute_histogram, load_image, save_image
from .objective import MAX_EXHAUSTIVE_M, build_context, exhaustive_search
from .optimizer import ALGORITHMS, run
from .segmetrics import quality, segment_image

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("ficsthresh")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return "inf" if x == float("inf") else f"{x:.7g}"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    log.info("running %d image(s) x levels %s x %s, %d runs each",
             len(cfg.images), cfg.levels, cfg.algorithms, cfg.runs)
    analysis = run_experiment(cfg)
    for p in emit_tables(analysis, cfg.out):
        print(p)
    return EXIT_OK


def _load(path):
    try:
        return load_image(path)
    except (OSError, PGMError) as exc:
        raise ImageLoadError(path, exc) from exc


def cmd_segment(args) -> int:
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    img = _load(args.image)
    ctx = build_context(compute_histogram(img))
    rec = run(default_config(args.algorithm, args.levels, args.seed), ctx, trajectory=False)
    seg = segment_image(img, rec.best_thresholds, ctx)
    save_image(seg, args.out)
    q = quality(img, seg)
    print("thresholds:", " ".join(str(t) for t in rec.best_thresholds))
    print("objective:", _fmt(rec.best_fitness))
    print("psnr:", _fmt(q.psnr))
    print("ssim:", _fmt(q.ssim))
    return EXIT_OK


def cmd_oracle(args) -> int:
    if not 1 <= args.levels <= MAX_EXHAUSTIVE_M:
        raise UsageError(f"--levels must lie in [1, {MAX_EXHAUSTIVE_M}] for exhaustive search")
    img = _load(args.image)
    t, value = exhaustive_search(build_context(compute_histogram(img)), args.levels)
    print("thresholds:", " ".join(str(v) for v in t))
    print("objective:", _fmt(value))
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        cells = load_runs(args.runs)
    except OSError as exc:
        raise ImageLoadError(args.runs, exc) from exc
    if not cells:
        raise ValueError(f"{args.runs}: no run records")
    algorithms = list(dict.fromkeys(c.algorithm for c in cells))
    control = args.control or ("FICS" if "FICS" in algorithms else algorithms[0])
    if control not in algorithms:
        raise UsageError(f"control {control!r} has no records")
    analysis = analyze(cells, control)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["image", "M", "algorithm", "mean", "std", "h"])
    w.writerows(objective_rows(analysis))
    print()
    w.writerow(["M", "algorithm", "mean_rank", "chi2"])
    w.writerows(rank_rows(analysis))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ficsthresh", description="Multilevel Otsu thresholding with cuckoo search variants.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute an experiment grid from a config file")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("segment", help="threshold one image with a single seeded run")
    s.add_argument("--image", required=True)
    s.add_argument("--levels", type=int, required=True)
    s.add_argument("--algorithm", choices=ALGORITHMS, type=str.upper, default="FICS")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    o = sub.add_parser("oracle", help="exhaustive optimum for M <= 3")
    o.add_argument("--image", required=True)
    o.add_argument("--levels", type=int, required=True)
    o.set_defaults(func=cmd_oracle)

    st = sub.add_parser("stats", help="recompute summaries, verdicts and ranks from runs.jsonl")
    st.add_argument("--runs", required=True)
    st.add_argument("--control", type=str.upper)
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"ficsthresh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageLoadError, PGMError, ValueError, OSError) as exc:
        print(f"ficsthresh: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Experiment grid driver: (image x M x algorithm x run) cells and result tables."""

from __future__ import annotations

import csv
import json
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from .imaging import GrayImage, PGMError, compute_histogram, load_image
from .objective import build_context
from .optimizer import ALGORITHMS, OptimizerConfig, RunRecord, run
from .segmetrics import QualityReport, quality, segment_image
from .stats import PairwiseVerdict, SampleSummary, friedman_mean_ranks, mean_ranks, summarize, wilcoxon_rank_sum

FES_PER_THRESHOLD = 1200
POPULATION_SIZE = 30
SIGNIFICANCE = 0.05

_ALGORITHM_DEFAULTS = {
    "CS": dict(pa=0.25, lam=1.5, alpha=1.0),
    "FICS": dict(pa=0.5, lam=1.5, alpha=1.0, neighbors=3),
    "FIPSO": dict(acceleration=4.0, inertia_start=0.95, inertia_end=0.4, neighbors=3),
}

_FIELD_ALIASES = {
    "lambda": "lam",
    "populationSize": "population_size",
    "maxFEs": "max_fes",
    "inertiaStart": "inertia_start",
    "inertiaEnd": "inertia_end",
}

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    pass


class ImageLoadError(RuntimeError):
    def __init__(self, path, reason):
        super().__init__(f"cannot load image {path}: {reason}")
        self.path = path


def default_config(algorithm: str, m: int = 3, seed: int = 0) -> OptimizerConfig:
    if algorithm not in _ALGORITHM_DEFAULTS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return OptimizerConfig(
        algorithm=algorithm,
        population_size=POPULATION_SIZE,
        dim=m,
        max_fes=FES_PER_THRESHOLD * m,
        seed=seed,
        **_ALGORITHM_DEFAULTS[algorithm],
    )


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, image_index: int, m: int, algorithm_index: int, run_index: int) -> int:
    """SplitMix64 chained over the cell coordinates."""
    h = _splitmix64(master_seed & _MASK64)
    for part in (image_index, m, algorithm_index, run_index):
        h = _splitmix64(h ^ (part & _MASK64))
    return h


@dataclass
class ExperimentConfig:
    images: list[str]
    levels: list[int] = field(default_factory=lambda: [3, 7, 11, 15])
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    runs: int = 30
    seed: int = 0
    out: str = "results"
    fes_per_threshold: int = FES_PER_THRESHOLD
    overrides: dict[str, dict[str, object]] = field(default_factory=dict)
    control: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.images:
            raise ConfigError("at least one image is required")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if any(m < 1 for m in self.levels) or not self.levels:
            raise ConfigError("levels must be a non-empty list of positive integers")
        if self.control is None:
            self.control = "FICS" if "FICS" in self.algorithms else self.algorithms[0]
        if self.control not in self.algorithms:
            raise ConfigError(f"control {self.control!r} is not among the algorithms")

    def optimizer_config(self, algorithm: str, m: int, seed: int) -> OptimizerConfig:
        extra = dict(self.overrides.get(algorithm, {}))
        extra.setdefault("max_fes", self.fes_per_threshold * m)
        try:
            return default_config(algorithm, m, seed).with_(**extra)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad override for {algorithm}: {exc}") from None


_OPT_FIELDS = {f.name: f.type for f in fields(OptimizerConfig)}


def _coerce(name: str, raw: str):
    kind = _OPT_FIELDS[name]
    if kind in ("int", int):
        return int(raw)
    if kind in ("float", float):
        return float(raw)
    return raw


def parse_config(text: str, base_dir: str | os.PathLike = ".") -> ExperimentConfig:
    """Parse the flat ``key = value`` experiment format.

    Lists are comma separated; ``<algorithm>.<field> = value`` lines
    override optimizer settings (``fics.pa = 0.5``). Relative image and
    output paths resolve against ``base_dir``.
    """
    kv: dict[str, str] = {}
    overrides: dict[str, dict[str, object]] = defaultdict(dict)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." in key:
            alg, name = key.split(".", 1)
            alg = alg.upper()
            name = _FIELD_ALIASES.get(name, name)
            if alg not in ALGORITHMS or name not in _OPT_FIELDS or name in ("algorithm", "dim", "seed"):
                raise ConfigError(f"line {lineno}: unknown override {key!r}")
            try:
                overrides[alg][name] = _coerce(name, value)
            except ValueError:
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
        else:
            kv[key] = value

    known = {"images", "levels", "algorithms", "runs", "seed", "out", "workers", "control", "fes_per_threshold"}
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    if "images" not in kv:
        raise ConfigError("missing required key 'images'")

    def split(v):
        return [s.strip() for s in v.split(",") if s.strip()]

    base = Path(base_dir)
    try:
        cfg = ExperimentConfig(
            images=[str(base / p) for p in split(kv["images"])],
            levels=[int(v) for v in split(kv.get("levels", "3,7,11,15"))],
            algorithms=[a.upper() for a in split(kv.get("algorithms", ",".join(ALGORITHMS)))],
            runs=int(kv.get("runs", 30)),
            seed=int(kv.get("seed", 0)),
            out=str(base / kv.get("out", "results")),
            fes_per_threshold=int(kv.get("fes_per_threshold", FES_PER_THRESHOLD)),
            overrides=dict(overrides),
            control=kv["control"].upper() if "control" in kv else None,
            workers=int(kv.get("workers", 1)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    for alg in cfg.algorithms:
        cfg.optimizer_config(alg, cfg.levels[0], 0)
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, Path(path).parent)


@dataclass
class CellResult:
    image: str
    m: int
    algorithm: str
    records: list[RunRecord]
    summary: SampleSummary
    best_run: int
    quality: QualityReport | None = None

    @property
    def best_record(self) -> RunRecord:
        return self.records[self.best_run]


@dataclass
class Analysis:
    cells: list[CellResult]
    control: str
    verdicts: dict[tuple[str, int, str], PairwiseVerdict]
    # M -> (per-algorithm mean ranks, chi2 or None when fewer than two images)
    ranks: dict[int, tuple[dict[str, float], float | None]]


def _best_index(records: list[RunRecord]) -> int:
    fits = [r.best_fitness for r in records]
    return fits.index(max(fits))


def make_cell(image: str, m: int, algorithm: str, records: list[RunRecord]) -> CellResult:
    return CellResult(
        image=image,
        m=m,
        algorithm=algorithm,
        records=records,
        summary=summarize([r.best_fitness for r in records]),
        best_run=_best_index(records),
    )


def analyze(cells: list[CellResult], control: str) -> Analysis:
    """Wilcoxon verdicts of ``control`` against every other algorithm and
    Friedman mean ranks over images for each M."""
    by_key = {(c.image, c.m, c.algorithm): c for c in cells}
    images = list(dict.fromkeys(c.image for c in cells))
    levels = list(dict.fromkeys(c.m for c in cells))
    algorithms = list(dict.fromkeys(c.algorithm for c in cells))

    verdicts = {}
    for c in cells:
        ref = by_key.get((c.image, c.m, control))
        if c.algorithm == control or ref is None:
            continue
        a = [r.best_fitness for r in ref.records]
        b = [r.best_fitness for r in c.records]
        if len(a) >= 3 and len(b) >= 3:
            verdicts[(c.image, c.m, c.algorithm)] = wilcoxon_rank_sum(a, b, SIGNIFICANCE)

    ranks = {}
    for m in levels:
        rows = [
            [by_key[(img, m, alg)].summary.mean for alg in algorithms]
            for img in images
            if all((img, m, alg) in by_key for alg in algorithms)
        ]
        if not rows:
            continue
        if len(rows) >= 2 and len(algorithms) >= 2:
            fr = friedman_mean_ranks(rows)
            ranks[m] = (dict(zip(algorithms, fr.mean_ranks)), fr.chi2)
        else:
            ranks[m] = (dict(zip(algorithms, (float(v) for v in mean_ranks(rows)))), None)
    return Analysis(cells, control, verdicts, ranks)


def _run_task(task):
    cfg, ctx = task
    return run(cfg, ctx)


def run_experiment(cfg: ExperimentConfig) -> Analysis:
    images: list[tuple[str, GrayImage]] = []
    for path in cfg.images:
        try:
            images.append((Path(path).stem, load_image(path)))
        except (OSError, PGMError) as exc:
            raise ImageLoadError(path, exc) from exc

    contexts = [build_context(compute_histogram(img)) for _, img in images]
    grid = []
    tasks = []
    for ii, (name, _) in enumerate(images):
        for m in cfg.levels:
            for ai, alg in enumerate(cfg.algorithms):
                grid.append((ii, name, m, alg))
                for r in range(cfg.runs):
                    seed = derive_seed(cfg.seed, ii, m, ai, r)
                    tasks.append((cfg.optimizer_config(alg, m, seed), contexts[ii]))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, cfg.runs)))
    else:
        records = [_run_task(t) for t in tasks]

    cells = []
    for k, (ii, name, m, alg) in enumerate(grid):
        cell = make_cell(name, m, alg, records[k * cfg.runs:(k + 1) * cfg.runs])
        img = images[ii][1]
        seg = segment_image(img, cell.best_record.best_thresholds, contexts[ii])
        cell.quality = quality(img, seg)
        cells.append(cell)
    return analyze(cells, cfg.control)


def fmt_value(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.7g}"


def fmt_std(x: float) -> str:
    return f"{x:.2E}"


def _write_csv(path: Path, header, rows, comment=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def objective_rows(analysis: Analysis):
    for c in analysis.cells:
        v = analysis.verdicts.get((c.image, c.m, c.algorithm))
        yield [c.image, c.m, c.algorithm, fmt_value(c.summary.mean), fmt_std(c.summary.std), v.h if v else ""]


def rank_rows(analysis: Analysis):
    for m, (ranks, chi2) in analysis.ranks.items():
        for alg, r in ranks.items():
            yield [m, alg, fmt_value(r), "" if chi2 is None else fmt_value(chi2)]


def emit_tables(analysis: Analysis, out_dir: str | os.PathLike) -> list[Path]:
    if not analysis.cells:
        raise ValueError("no results to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / n for n in ("objective.csv", "quality.csv", "ranks.csv", "runs.jsonl")]

    _write_csv(paths[0], ["image", "M", "algorithm", "mean", "std", "h"], objective_rows(analysis))
    _write_csv(
        paths[1],
        ["image", "M", "algorithm", "psnr", "ssim"],
        (
            [c.image, c.m, c.algorithm, fmt_value(c.quality.psnr), fmt_value(c.quality.ssim)]
            for c in analysis.cells if c.quality is not None
        ),
        comment="metrics of the best run in each cell (class-mean reconstruction)",
    )
    _write_csv(paths[2], ["M", "algorithm", "mean_rank", "chi2"], rank_rows(analysis),
               comment="Friedman mean ranks over images; higher is better")
    with open(paths[3], "w", encoding="utf-8") as fh:
        for c in analysis.cells:
            for i, r in enumerate(c.records):
                row = {"image": c.image, "M": c.m, "run": i, **r.to_dict()}
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return paths


def load_runs(path: str | os.PathLike) -> list[CellResult]:
    """Regroup a ``runs.jsonl`` file into cells, preserving first-seen order."""
    groups: dict[tuple[str, int, str], list[RunRecord]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                key = (str(d["image"]), int(d["M"]), str(d["algorithm"]))
                groups.setdefault(key, []).append(RunRecord.from_dict(d))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed run record ({exc})") from None
    return [make_cell(img, m, alg, recs) for (img, m, alg), recs in groups.items()]

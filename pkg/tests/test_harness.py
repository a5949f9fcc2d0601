import csv
import json
import itertools

import numpy as np
import pytest

from ficsthresh import harness, synthetic
from ficsthresh.cli import main
from ficsthresh.harness import (
    ConfigError,
    ExperimentConfig,
    ImageLoadError,
    default_config,
    derive_seed,
    emit_tables,
    fmt_std,
    fmt_value,
    load_config,
    load_runs,
    parse_config,
    run_experiment,
)
from ficsthresh.imaging import GrayImage, load_image, save_image


@pytest.fixture
def images(tmp_path):
    paths = {}
    for name, h in [("spikes", synthetic.two_spike(50)), ("tri", synthetic.trimodal())]:
        p = tmp_path / f"{name}.pgm"
        save_image(synthetic.image_from_histogram(h), p)
        paths[name] = p
    return paths


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_default_config():
    c = default_config("FICS")
    assert (c.pa, c.lam, c.neighbors, c.population_size) == (0.5, 1.5, 3, 30)
    c = default_config("CS")
    assert (c.pa, c.lam, c.alpha, c.population_size) == (0.25, 1.5, 1.0, 30)
    c = default_config("FIPSO")
    assert (c.acceleration, c.inertia_start, c.inertia_end) == (4.0, 0.95, 0.4)
    assert default_config("CS", 7).max_fes == 8400
    with pytest.raises(ValueError):
        default_config("ABC")


def test_derive_seed_basics():
    assert derive_seed(1, 0, 3, 0, 0) == derive_seed(1, 0, 3, 0, 0)
    assert derive_seed(1, 0, 3, 0, 0) != derive_seed(1, 0, 3, 0, 1)
    assert 0 <= derive_seed(2**64 - 1, 9, 15, 2, 29) < 2**64


def test_derive_seed_collision_scan():
    grid = list(itertools.product(range(10), (3, 7, 11, 15), range(5), range(30)))
    a = {derive_seed(0, *cell) for cell in grid}
    b = {derive_seed(1, *cell) for cell in grid}
    assert len(a) == len(b) == len(grid)
    assert not a & b


def test_parse_config(tmp_path):
    text = """
    # desk run
    images = a.pgm, sub/b.pgm
    levels = 3, 7
    algorithms = cs, FICS
    runs = 4
    seed = 11
    out = res
    fics.pa = 0.4
    cs.lambda = 1.7
    """
    cfg = parse_config(text, tmp_path)
    assert cfg.images == [str(tmp_path / "a.pgm"), str(tmp_path / "sub/b.pgm")]
    assert cfg.levels == [3, 7] and cfg.algorithms == ["CS", "FICS"] and cfg.runs == 4
    assert cfg.control == "FICS" and cfg.out == str(tmp_path / "res")
    assert cfg.optimizer_config("FICS", 7, 5).pa == 0.4
    assert cfg.optimizer_config("CS", 7, 5).lam == 1.7
    assert cfg.optimizer_config("CS", 7, 5).max_fes == 8400


@pytest.mark.parametrize(
    "text",
    [
        "levels = 3",
        "images = a.pgm\nbogus = 1",
        "images = a.pgm\nga.pa = 0.1",
        "images = a.pgm\nfics.pa = high",
        "images = a.pgm\nfics.pa = 2",
        "images = a.pgm\nruns = 0",
        "images = a.pgm\nalgorithms = CS\ncontrol = FICS",
        "images = a.pgm\njust words",
    ],
)
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_minimal_grid(images, tmp_path):
    cfg = ExperimentConfig(images=[str(images["tri"])], levels=[3], algorithms=["FICS"], runs=2, out=str(tmp_path))
    res = run_experiment(cfg)
    assert len(res.cells) == 1 and len(res.cells[0].records) == 2
    paths = emit_tables(res, tmp_path / "out")
    rows = read_csv(paths[0])
    assert rows[0] == ["image", "M", "algorithm", "mean", "std", "h"]
    assert len(rows) == 2 and rows[1][:3] == ["tri", "3", "FICS"] and rows[1][5] == ""


def test_two_spike_collapses_to_bilevel_optimum(images):
    img = load_image(images["spikes"])
    from ficsthresh.imaging import compute_histogram
    from ficsthresh.objective import build_context, exhaustive_search

    assert exhaustive_search(build_context(compute_histogram(img)), 3)[1] == 16256.25
    cfg = ExperimentConfig(images=[str(images["spikes"])], levels=[3], runs=5)
    res = run_experiment(cfg)
    for cell in res.cells:
        assert [r.best_fitness for r in cell.records] == [16256.25] * 5
        assert cell.quality.psnr_infinite


def test_unloadable_image_aborts_before_running(images, tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run", lambda *a, **k: pytest.fail("a run started"))
    cfg = ExperimentConfig(images=[str(images["tri"]), str(tmp_path / "missing.pgm")], levels=[3], runs=1)
    with pytest.raises(ImageLoadError, match="missing.pgm"):
        run_experiment(cfg)


def test_formatting():
    assert fmt_std(0.0247) == "2.47E-02"
    assert fmt_std(0.0) == "0.00E+00"
    assert fmt_value(2703.572) == "2703.572"
    assert fmt_value(904.6902) == "904.6902"
    assert fmt_value(float("inf")) == "inf"


@pytest.fixture
def grid_config(images, tmp_path):
    text = (
        f"images = {images['spikes'].name}, {images['tri'].name}\n"
        "levels = 2, 3\nalgorithms = CS, FICS, FIPSO\nruns = 3\nseed = 5\n"
        "fes_per_threshold = 100\nout = results\n"
    )
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return p


def test_grid_outputs_consistent(grid_config):
    cfg = load_config(grid_config)
    res = run_experiment(cfg)
    paths = emit_tables(res, cfg.out)
    lines = paths[3].read_text().splitlines()
    assert len(lines) == 2 * 2 * 3 * 3
    for cell in res.cells:
        fits = [r.best_fitness for r in cell.records]
        assert min(fits) <= cell.summary.mean <= max(fits)
        for r in cell.records:
            assert r.evaluations_used <= 100 * cell.m
    ranks = read_csv(paths[2])[1:]
    for m in ("2", "3"):
        assert sum(float(r[2]) for r in ranks if r[0] == m) == pytest.approx(6.0)
    obj = read_csv(paths[0])[1:]
    assert {r[5] for r in obj if r[2] == "FICS"} == {""}
    assert all(r[5] in "+=-" and r[5] for r in obj if r[2] != "FICS")
    quality_rows = read_csv(paths[1])
    assert quality_rows[0] == ["image", "M", "algorithm", "psnr", "ssim"] and len(quality_rows) == 13
    rec = json.loads(lines[0])
    assert {"image", "M", "algorithm", "run", "seed", "bestFitness", "bestThresholds", "evaluationsUsed"} <= set(rec)


def test_parallel_matches_serial(grid_config):
    cfg = load_config(grid_config)
    serial = run_experiment(cfg)
    cfg.workers = 2
    parallel = run_experiment(cfg)
    assert [c.records for c in serial.cells] == [c.records for c in parallel.cells]


def test_load_runs_round_trip(grid_config):
    cfg = load_config(grid_config)
    res = run_experiment(cfg)
    paths = emit_tables(res, cfg.out)
    cells = load_runs(paths[3])
    assert [(c.image, c.m, c.algorithm, c.records) for c in cells] == [
        (c.image, c.m, c.algorithm, c.records) for c in res.cells
    ]
    again = harness.analyze(cells, "FICS")
    assert again.verdicts == res.verdicts and again.ranks == res.ranks


# --- CLI ---------------------------------------------------------------


def test_cli_run_is_deterministic(grid_config, capsys):
    out = grid_config.parent / "results"
    assert main(["run", "--config", str(grid_config)]) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert set(first) == {"objective.csv", "quality.csv", "ranks.csv", "runs.jsonl"}
    assert main(["run", "--config", str(grid_config)]) == 0
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_cli_segment(images, tmp_path, capsys):
    out = tmp_path / "seg.pgm"
    assert main(["segment", "--image", str(images["tri"]), "--levels", "2", "--algorithm", "fics",
                 "--seed", "3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "thresholds:" in text and "psnr:" in text and "ssim:" in text
    seg = load_image(out)
    assert len(np.unique(seg.pixels)) <= 3


def test_cli_oracle(images, capsys):
    assert main(["oracle", "--image", str(images["spikes"]), "--levels", "1"]) == 0
    out = capsys.readouterr().out
    assert "thresholds: 1" in out and "objective: 16256.25" in out


def test_cli_stats(grid_config, capsys):
    main(["run", "--config", str(grid_config)])
    capsys.readouterr()
    runs = grid_config.parent / "results" / "runs.jsonl"
    assert main(["stats", "--runs", str(runs)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("image,M,algorithm,mean,std,h")
    assert "M,algorithm,mean_rank,chi2" in out


def test_cli_exit_codes(images, tmp_path, capsys):
    assert main(["oracle", "--image", str(images["tri"]), "--levels", "5"]) == 1
    assert main(["oracle", "--image", str(tmp_path / "none.pgm"), "--levels", "1"]) == 2
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    assert main(["segment", "--image", str(bad), "--levels", "1", "--out", str(tmp_path / "o.pgm")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["segment", "--image", str(bad)])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    cfg = tmp_path / "c.cfg"
    cfg.write_text("images = nope.pgm\nlevels = 3\n")
    assert main(["run", "--config", str(cfg)]) == 2
    cfg.write_text("levels = 3\n")
    assert main(["run", "--config", str(cfg)]) == 1
    broken = tmp_path / "runs.jsonl"
    broken.write_text("{not json}\n")
    assert main(["stats", "--runs", str(broken)]) == 2

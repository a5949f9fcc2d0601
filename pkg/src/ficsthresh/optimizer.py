"""Cuckoo search, fully informed cuckoo search and fully informed PSO.

All three maximise the Otsu objective over real positions in [0, 255]^M
decoded to integer thresholds. A run draws every random number from one
``numpy.random.Generator`` (PCG64) in a fixed order, so a seed replays a run
bit for bit.

Per-phase draw order:

* init: positions ``U(lower, upper)`` of shape (Np, D)
* Lévy phase: Mantegna numerators ``N(0, sigma_u)`` (Np, D), then
  denominators ``N(0, 1)`` (Np, D)
* CS breeding: r1 (Np), r2 (Np), mutation gate (Np, D), epsilon (Np, D)
* FICS breeding: r1 (Np), r2 (Np), mutation gate (Np, D),
  neighbour weight factors (Np, D, Ne), epsilon (Np, D)
* FIPSO step: acceleration factors (Np, Ne, D)

Within a phase every trial vector is built from the population as it stood
at the start of that phase; greedy replacement is then applied per candidate.
When the evaluation budget runs out mid-phase, only the leading candidates
that still fit in the budget are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .objective import ObjectiveContext, decode_positions, otsu_batch

ALGORITHMS = ("CS", "FICS", "FIPSO")


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "FICS"
    population_size: int = 30
    dim: int = 1
    pa: float = 0.5
    alpha: float = 1.0
    lam: float = 1.5
    neighbors: int = 3
    max_fes: int = 1200
    lower: float = 0.0
    upper: float = 255.0
    inertia_start: float = 0.95
    inertia_end: float = 0.4
    acceleration: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0.0 <= self.pa <= 1.0:
            raise ValueError("pa must lie in [0, 1]")
        if not 1.0 < self.lam <= 2.0:
            raise ValueError("lam must lie in (1, 2]")
        if self.neighbors % 2 == 0 or not 1 <= self.neighbors <= self.population_size:
            raise ValueError("neighbors must be odd and at most population_size")
        if self.max_fes < self.population_size:
            raise ValueError("max_fes must be >= population_size")
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def with_(self, **changes) -> OptimizerConfig:
        return replace(self, **changes)


@dataclass
class Population:
    positions: np.ndarray
    fitness: np.ndarray

    def copy(self) -> Population:
        return Population(self.positions.copy(), self.fitness.copy())

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.fitness))

    @property
    def best(self) -> np.ndarray:
        return self.positions[self.best_index].copy()


@dataclass
class RunRecord:
    algorithm: str
    best_fitness: float
    best_thresholds: tuple[int, ...]
    evaluations_used: int
    seed: int
    trajectory: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "bestFitness": self.best_fitness,
            "bestThresholds": list(self.best_thresholds),
            "evaluationsUsed": self.evaluations_used,
            "seed": self.seed,
            "trajectory": [[n, f] for n, f in self.trajectory],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(
            algorithm=d["algorithm"],
            best_fitness=float(d["bestFitness"]),
            best_thresholds=tuple(int(t) for t in d["bestThresholds"]),
            evaluations_used=int(d["evaluationsUsed"]),
            seed=int(d["seed"]),
            trajectory=[(int(n), float(f)) for n, f in d.get("trajectory", [])],
        )


class Evaluator:
    """Otsu fitness of real positions with a running evaluation count."""

    def __init__(self, ctx: ObjectiveContext):
        self.ctx = ctx
        self.count = 0

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        positions = np.atleast_2d(positions)
        self.count += positions.shape[0]
        return otsu_batch(self.ctx, decode_positions(positions))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def mantegna_sigma(lam: float) -> float:
    num = math.gamma(1 + lam) * math.sin(math.pi * lam / 2)
    den = math.gamma((1 + lam) / 2) * lam * 2 ** ((lam - 1) / 2)
    return (num / den) ** (1 / lam)


def levy_step(rng: np.random.Generator, lam: float, size) -> np.ndarray:
    """Symmetric heavy-tailed steps with tail index ``lam`` (Mantegna's method)."""
    if not 1.0 < lam <= 2.0:
        raise ValueError(f"lambda must lie in (1, 2], got {lam}")
    u = rng.normal(0.0, mantegna_sigma(lam), size)
    v = rng.normal(0.0, 1.0, size)
    return u / np.abs(v) ** (1 / lam)


def ring_neighbors(i: int, np_: int, n: int) -> list[int]:
    if 2 * n + 1 > np_:
        raise ValueError("ring neighbourhood larger than the population")
    return [(i + d) % np_ for d in range(-n, n + 1)]


def _ring_table(np_: int, ne: int) -> np.ndarray:
    n = ne // 2
    return (np.arange(np_)[:, None] + np.arange(-n, n + 1)[None, :]) % np_


def fully_informed_point(fitnesses, coords, rng=None, rands=None) -> float:
    """Fitness-weighted combination of neighbour coordinates.

    Weights are ``rand_k * f_k``. ``coords`` is ordered as returned by
    :func:`ring_neighbors`, so the middle entry is the centre individual; it
    is the fallback when every weight is zero. ``rands`` overrides the
    uniform draws.
    """
    f = np.asarray(fitnesses, float)
    x = np.asarray(coords, float)
    if rands is None:
        rands = rng.random(f.shape)
    w = np.asarray(rands, float) * f
    return float(_weighted_point(w, x, x[len(x) // 2]))


def _weighted_point(w: np.ndarray, x: np.ndarray, center):
    """Weighted mean along the last axis, written relative to ``center`` so a
    constant neighbourhood maps to itself exactly."""
    sw = w.sum(axis=-1)
    ok = sw > 0
    safe = np.where(ok, sw, 1.0)
    fi = center + (w * (x - np.expand_dims(center, -1))).sum(axis=-1) / safe
    fi = np.clip(fi, x.min(axis=-1), x.max(axis=-1))
    return np.where(ok, fi, center)


def _distinct_peers(rng: np.random.Generator, np_: int) -> tuple[np.ndarray, np.ndarray]:
    """Two indices per candidate, distinct from each other and from the candidate."""
    idx = np.arange(np_)
    r1 = (idx + 1 + rng.integers(0, np_ - 1, np_)) % np_
    r2 = rng.integers(0, np_ - 2, np_)
    lo, hi = np.minimum(idx, r1), np.maximum(idx, r1)
    r2 = r2 + (r2 >= lo)
    r2 = r2 + (r2 >= hi)
    return r1, r2


def _greedy(pop: Population, trial: np.ndarray, evaluate: Evaluator, budget: int | None):
    k = pop.positions.shape[0] if budget is None else min(budget, pop.positions.shape[0])
    out = pop.copy()
    if k <= 0:
        return out, 0
    f = evaluate(trial[:k])
    better = f > pop.fitness[:k]
    out.positions[:k][better] = trial[:k][better]
    out.fitness[:k][better] = f[better]
    return out, k


def init_population(cfg: OptimizerConfig, evaluate: Evaluator, rng: np.random.Generator) -> Population:
    pos = rng.uniform(cfg.lower, cfg.upper, (cfg.population_size, cfg.dim))
    return Population(pos, evaluate(pos))


def levy_flight_phase(pop, best, cfg, evaluate, rng, budget=None):
    """Move every candidate by a Lévy-scaled multiple of its offset from ``best``.

    Returns ``(population, best, evaluations)``.
    """
    step = levy_step(rng, cfg.lam, pop.positions.shape)
    x = pop.positions
    trial = np.clip(x + cfg.alpha * step * (x - best), cfg.lower, cfg.upper)
    out, used = _greedy(pop, trial, evaluate, budget)
    return out, out.best, used


def cs_breeding_phase(pop, cfg, evaluate, rng, budget=None):
    np_, d = pop.positions.shape
    r1, r2 = _distinct_peers(rng, np_)
    gate = rng.random((np_, d)) > cfg.pa
    eps = rng.random((np_, d))
    x = pop.positions
    trial = np.where(gate, x + eps * (x[r1] - x[r2]), x)
    trial = np.clip(trial, cfg.lower, cfg.upper)
    return _greedy(pop, trial, evaluate, budget)


def fics_breeding_phase(pop, cfg, evaluate, rng, budget=None):
    np_, d = pop.positions.shape
    nbr = _ring_table(np_, cfg.neighbors)
    r1, r2 = _distinct_peers(rng, np_)
    gate = rng.random((np_, d)) > cfg.pa
    wr = rng.random((np_, d, cfg.neighbors))
    eps = rng.random((np_, d))
    x = pop.positions
    coords = np.transpose(x[nbr], (0, 2, 1))          # (Np, D, Ne)
    w = wr * pop.fitness[nbr][:, None, :]
    fi = _weighted_point(w, coords, x)
    trial = np.where(gate, fi + eps * (x[r1] - x[r2]), x)
    trial = np.clip(trial, cfg.lower, cfg.upper)
    return _greedy(pop, trial, evaluate, budget)


@dataclass
class Swarm:
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    pbest_positions: np.ndarray
    pbest_fitness: np.ndarray

    @classmethod
    def from_population(cls, pop: Population) -> Swarm:
        return cls(
            pop.positions.copy(),
            np.zeros_like(pop.positions),
            pop.fitness.copy(),
            pop.positions.copy(),
            pop.fitness.copy(),
        )

    @property
    def best_fitness(self) -> float:
        return float(self.pbest_fitness.max())


def inertia(cfg: OptimizerConfig, iteration: int, max_iterations: int) -> float:
    if max_iterations <= 1:
        return cfg.inertia_start
    frac = iteration / (max_iterations - 1)
    return cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * frac


def fipso_step(swarm: Swarm, cfg, evaluate, rng, iteration, max_iterations, budget=None):
    """One synchronous fully informed PSO iteration over the ring.

    Returns ``(swarm, evaluations)``.
    """
    np_, d = swarm.positions.shape
    ne = cfg.neighbors
    nbr = _ring_table(np_, ne)
    u = rng.random((np_, ne, d))
    w = inertia(cfg, iteration, max_iterations)
    k = np_ if budget is None else min(budget, np_)
    s = Swarm(*(a.copy() for a in (
        swarm.positions, swarm.velocities, swarm.fitness, swarm.pbest_positions, swarm.pbest_fitness
    )))
    if k <= 0:
        return s, 0
    pull = ((cfg.acceleration / ne) * u * (swarm.pbest_positions[nbr] - swarm.positions[:, None, :])).sum(axis=1)
    vmax = cfg.upper - cfg.lower
    vel = np.clip(w * swarm.velocities + pull, -vmax, vmax)
    pos = np.clip(swarm.positions + vel, cfg.lower, cfg.upper)
    f = evaluate(pos[:k])
    s.positions[:k] = pos[:k]
    s.velocities[:k] = vel[:k]
    s.fitness[:k] = f
    better = f > swarm.pbest_fitness[:k]
    s.pbest_positions[:k][better] = pos[:k][better]
    s.pbest_fitness[:k][better] = f[better]
    return s, k


def run(cfg: OptimizerConfig, ctx: ObjectiveContext, trajectory: bool = True) -> RunRecord:
    """Optimise until ``cfg.max_fes`` evaluations have been spent."""
    rng = make_rng(cfg.seed)
    evaluate = Evaluator(ctx)
    pop = init_population(cfg, evaluate, rng)
    traj = [(evaluate.count, float(pop.fitness.max()))]

    def mark(value):
        if trajectory:
            traj.append((evaluate.count, float(value)))

    if cfg.algorithm == "FIPSO":
        swarm = Swarm.from_population(pop)
        max_it = -(-(cfg.max_fes - cfg.population_size) // cfg.population_size)
        it = 0
        while evaluate.count < cfg.max_fes:
            swarm, _ = fipso_step(swarm, cfg, evaluate, rng, it, max_it, cfg.max_fes - evaluate.count)
            it += 1
            mark(swarm.best_fitness)
        best_pos = swarm.pbest_positions[int(np.argmax(swarm.pbest_fitness))]
        best_fit = swarm.best_fitness
    else:
        breed = cs_breeding_phase if cfg.algorithm == "CS" else fics_breeding_phase
        best = pop.best
        while evaluate.count < cfg.max_fes:
            pop, best, _ = levy_flight_phase(pop, best, cfg, evaluate, rng, cfg.max_fes - evaluate.count)
            mark(pop.fitness.max())
            if evaluate.count >= cfg.max_fes:
                break
            pop, _ = breed(pop, cfg, evaluate, rng, cfg.max_fes - evaluate.count)
            best = pop.best
            mark(pop.fitness.max())
        best_pos = pop.best
        best_fit = float(pop.fitness.max())

    thresholds = tuple(int(t) for t in decode_positions(best_pos))
    return RunRecord(
        algorithm=cfg.algorithm,
        best_fitness=float(best_fit),
        best_thresholds=thresholds,
        evaluations_used=evaluate.count,
        seed=cfg.seed,
        trajectory=traj if trajectory else [],
    )

"""Run summaries, Wilcoxon rank-sum verdicts and Friedman mean ranks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

EXACT_MAX_N = 12


@dataclass(frozen=True)
class SampleSummary:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class PairwiseVerdict:
    h: str
    p_value: float


@dataclass(frozen=True)
class FriedmanResult:
    mean_ranks: tuple[float, ...]
    chi2: float


def summarize(samples) -> SampleSummary:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return SampleSummary(mean=float(x.mean()), std=std, n=int(x.size))


def average_ranks(x) -> np.ndarray:
    """1-based ranks in ascending order; tied values share their mean rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _tie_term(ranks: np.ndarray) -> float:
    _, t = np.unique(ranks, return_counts=True)
    return float(np.sum(t**3 - t))


def rank_sum_pvalue(a, b, method: str = "auto") -> tuple[float, float]:
    """Two-sided rank-sum p-value for ``a`` against ``b``.

    ``method`` is ``"exact"`` (full enumeration of rank assignments),
    ``"normal"`` (tie- and continuity-corrected normal approximation) or
    ``"auto"`` (exact up to 12 pooled observations). Returns
    ``(p_value, rank_sum_of_a)``.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = average_ranks(np.concatenate([a, b]))
    w = float(ranks[:n1].sum())
    expected = n1 * (n + 1) / 2
    dev = abs(w - expected)
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"

    if method == "exact":
        tol = 1e-9 * max(1.0, expected)
        hits = total = 0
        for combo in itertools.combinations(ranks, n1):
            total += 1
            if abs(sum(combo) - expected) >= dev - tol:
                hits += 1
        return min(1.0, hits / total), w
    if method == "normal":
        var = n1 * n2 / 12 * ((n + 1) - _tie_term(ranks) / (n * (n - 1)))
        if var <= 0:
            return 1.0, w
        z = max(dev - 0.5, 0.0) / math.sqrt(var)
        return min(1.0, math.erfc(z / math.sqrt(2))), w
    raise ValueError(f"unknown method {method!r}")


def wilcoxon_rank_sum(a, b, alpha: float = 0.05, maximize: bool = True,
                      method: str = "auto") -> PairwiseVerdict:
    """Compare control sample ``a`` against ``b``.

    ``h`` is ``"+"`` when ``a`` is significantly better, ``"-"`` when ``b``
    is, ``"="`` otherwise. Better means larger when ``maximize``.
    """
    if len(a) < 3 or len(b) < 3:
        raise ValueError("rank-sum test needs at least 3 samples per group")
    p, w = rank_sum_pvalue(a, b, method)
    if p >= alpha:
        return PairwiseVerdict("=", p)
    diff = float(np.median(a) - np.median(b))
    if diff == 0.0:
        diff = w - len(a) * (len(a) + len(b) + 1) / 2
    a_better = diff > 0 if maximize else diff < 0
    return PairwiseVerdict("+" if a_better else "-", p)


def mean_ranks(table, maximize: bool = True) -> np.ndarray:
    """Per-row ranks (k for the best column, 1 for the worst), averaged over rows."""
    rows = [np.asarray(r, float) for r in table]
    if not rows or len({r.size for r in rows}) != 1:
        raise ValueError("table must be a non-empty rectangular matrix")
    m = np.vstack(rows)
    sign = 1.0 if maximize else -1.0
    return np.mean([average_ranks(sign * r) for r in m], axis=0)


def friedman_mean_ranks(table, maximize: bool = True) -> FriedmanResult:
    rows = [list(r) for r in table]
    if len({len(r) for r in rows}) > 1:
        raise ValueError("ragged table")
    n = len(rows)
    k = len(rows[0]) if rows else 0
    if n < 2 or k < 2:
        raise ValueError("Friedman ranking needs at least 2 rows and 2 columns")
    r = mean_ranks(rows, maximize)
    chi2 = 12 * n / (k * (k + 1)) * (float(np.sum(r**2)) - k * (k + 1) ** 2 / 4)
    return FriedmanResult(tuple(float(v) for v in r), chi2)

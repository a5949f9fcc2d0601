"""Otsu between-class variance over a gray-level histogram.

Classes are half-open gray-level intervals ``[t_m, t_{m+1})`` with sentinels
``t_0 = 0`` and ``t_{M+1} = 256``. Evaluation uses integer prefix sums of the
histogram counts and moments, so each class costs O(1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .imaging import LEVELS, Histogram

T_MIN = 1
T_MAX = LEVELS - 1
MAX_EXHAUSTIVE_M = 3


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """Prefix sums of a histogram.

    ``count_prefix[k]`` and ``moment_prefix[k]`` hold the integer sums of
    ``n_i`` and ``i * n_i`` over ``i < k``; the probability-normalised views
    are exposed as ``cum_count`` and ``cum_moment``.
    """

    count_prefix: np.ndarray
    moment_prefix: np.ndarray
    total: int

    @property
    def cum_count(self) -> np.ndarray:
        return self.count_prefix / self.total

    @property
    def cum_moment(self) -> np.ndarray:
        return self.moment_prefix / self.total

    @cached_property
    def total_mean(self) -> float:
        return float(self.moment_prefix[-1]) / self.total

    def class_stats(self, lo, hi):
        """Return (omega, mu) for classes ``[lo, hi)``; mu is 0 for empty classes."""
        dc = self.count_prefix[hi] - self.count_prefix[lo]
        dm = self.moment_prefix[hi] - self.moment_prefix[lo]
        # an empty class also has zero moment, so mu falls out as 0
        return dc / self.total, dm / np.maximum(dc, 1)

    def class_term(self, lo, hi):
        omega, mu = self.class_stats(lo, hi)
        return omega * (mu - self.total_mean) ** 2


def build_context(h: Histogram) -> ObjectiveContext:
    levels = np.arange(LEVELS, dtype=np.int64)
    count_prefix = np.concatenate(([0], np.cumsum(h.counts, dtype=np.int64)))
    moment_prefix = np.concatenate(([0], np.cumsum(levels * h.counts, dtype=np.int64)))
    count_prefix.setflags(write=False)
    moment_prefix.setflags(write=False)
    return ObjectiveContext(count_prefix, moment_prefix, h.total)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def decode_positions(positions) -> np.ndarray:
    """Map real positions of shape (..., M) to sorted integer thresholds in [1, 255]."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 0 or pos.shape[-1] == 0:
        raise ValueError("position must have at least one coordinate")
    t = _round_half_away(np.clip(pos, T_MIN, T_MAX)).astype(np.int64)
    return np.sort(t, axis=-1)


def decode_position(pos) -> tuple[int, ...]:
    pos = np.asarray(pos, dtype=float)
    if pos.ndim != 1:
        raise ValueError("expected a 1-D position")
    return tuple(int(v) for v in decode_positions(pos))


def otsu_batch(ctx: ObjectiveContext, thresholds) -> np.ndarray:
    """Between-class variance for each row of a (P, M) array of sorted thresholds."""
    t = np.asarray(thresholds, dtype=np.int64)
    if t.ndim == 1:
        t = t[None, :]
    p = t.shape[0]
    bounds = np.concatenate(
        (np.zeros((p, 1), np.int64), t, np.full((p, 1), LEVELS, np.int64)), axis=1
    )
    terms = ctx.class_term(bounds[:, :-1], bounds[:, 1:])
    return terms.sum(axis=1)


def otsu_value(ctx: ObjectiveContext, t) -> float:
    return float(otsu_batch(ctx, np.asarray(t, dtype=np.int64)[None, :])[0])


def exhaustive_search(ctx: ObjectiveContext, m: int) -> tuple[tuple[int, ...], float]:
    """Global maximiser over all strictly increasing threshold vectors in [1, 255]^m.

    Ties resolve to the lexicographically smallest vector. Only m <= 3 is
    supported.
    """
    if not 1 <= m <= MAX_EXHAUSTIVE_M:
        raise ValueError(f"exhaustive search supports 1 <= M <= {MAX_EXHAUSTIVE_M}, got {m}")
    # term[a, b] is the class contribution of [a, b); a < b is required
    idx = np.arange(LEVELS + 1)
    term = ctx.class_term(idx[:, None], idx[None, :])
    ts = np.arange(T_MIN, T_MAX + 1)

    if m == 1:
        vals = term[0, ts] + term[ts, LEVELS]
        k = int(np.argmax(vals))
        best = (int(ts[k]),)
    elif m == 2:
        vals = (term[0, ts][:, None] + term[ts[:, None], ts[None, :]]) + term[ts, LEVELS][None, :]
        vals[ts[:, None] >= ts[None, :]] = -np.inf
        k = int(np.argmax(vals))
        i, j = np.unravel_index(k, vals.shape)
        best = (int(ts[i]), int(ts[j]))
    else:
        best, best_val = None, -np.inf
        upper = ts[:, None] >= ts[None, :]
        inner = term[ts[:, None], ts[None, :]]
        tail = term[ts, LEVELS][None, :]
        for t1 in range(T_MIN, T_MAX - 1):
            head = term[0, t1] + term[t1, ts]
            vals = (head[:, None] + inner) + tail
            vals[upper] = -np.inf
            vals[ts <= t1, :] = -np.inf
            k = int(np.argmax(vals))
            if vals.flat[k] > best_val:
                i, j = np.unravel_index(k, vals.shape)
                best, best_val = (t1, int(ts[i]), int(ts[j])), vals.flat[k]
    return best, otsu_value(ctx, best)

"""Deterministic synthetic histograms and images for experiments and tests."""

from __future__ import annotations

import numpy as np

from .imaging import LEVELS, GrayImage, Histogram


def two_spike(count: int = 2) -> Histogram:
    counts = np.zeros(LEVELS, np.int64)
    counts[0] = counts[255] = count
    return Histogram.from_counts(counts)


def single_spike(level: int = 100, count: int = 9) -> Histogram:
    counts = np.zeros(LEVELS, np.int64)
    counts[level] = count
    return Histogram.from_counts(counts)


def uniform(count: int = 1) -> Histogram:
    return Histogram.from_counts(np.full(LEVELS, count, np.int64))


def gaussian_mixture(means, sigmas, weights=None, total: int = 100_000) -> Histogram:
    """Discretised Gaussian mixture on levels 0..255 with exactly ``total`` pixels.

    Counts are apportioned by largest remainder.
    """
    means = np.asarray(means, float)
    sigmas = np.broadcast_to(np.asarray(sigmas, float), means.shape)
    weights = np.ones_like(means) if weights is None else np.asarray(weights, float)
    weights = weights / weights.sum()
    levels = np.arange(LEVELS)[:, None]
    dens = weights * np.exp(-0.5 * ((levels - means) / sigmas) ** 2) / sigmas
    dens = dens.sum(axis=1)
    raw = total * dens / dens.sum()
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return Histogram.from_counts(counts)


def bimodal() -> Histogram:
    return gaussian_mixture([60, 190], 15)


def trimodal() -> Histogram:
    return gaussian_mixture([50, 125, 200], [12, 18, 10], [0.3, 0.45, 0.25])


def five_mode() -> Histogram:
    return gaussian_mixture(
        [30, 80, 125, 175, 225], [9, 14, 11, 16, 8], [0.15, 0.25, 0.2, 0.25, 0.15]
    )


BENCHMARK_HISTOGRAMS = {
    "two_spike": two_spike,
    "single_spike": single_spike,
    "uniform": uniform,
    "bimodal": bimodal,
    "trimodal": trimodal,
}


def image_from_histogram(h: Histogram, width: int | None = None, seed: int = 0) -> GrayImage:
    """Raster whose histogram is exactly ``h``; pixel order is a seeded shuffle."""
    pixels = np.repeat(np.arange(LEVELS, dtype=np.uint8), h.counts)
    np.random.default_rng(seed).shuffle(pixels)
    n = pixels.size
    if width is None:
        width = next(w for w in range(int(np.sqrt(n)), 0, -1) if n % w == 0)
    if n % width:
        raise ValueError(f"{n} pixels do not fill rows of width {width}")
    return GrayImage(width=width, height=n // width, pixels=pixels)

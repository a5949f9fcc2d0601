"""Class-mean reconstruction of a thresholded image, scored by PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imaging import LEVELS, MAXVAL, GrayImage
from .objective import ObjectiveContext

# stabilising constants (0.01*255)^2 and (0.03*255)^2
SSIM_C1 = 6.5025
SSIM_C2 = 58.5225


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    ssim: float
    mse: float

    @property
    def psnr_infinite(self) -> bool:
        return math.isinf(self.psnr)


def class_mean_lut(t, ctx: ObjectiveContext) -> np.ndarray:
    """Lookup table mapping each gray level to the rounded mean of its class."""
    bounds = np.concatenate(([0], np.asarray(t, dtype=np.int64), [LEVELS]))
    lo, hi = bounds[:-1], bounds[1:]
    _, mu = ctx.class_stats(lo, hi)
    means = np.floor(mu + 0.5).astype(np.uint8)  # mu >= 0, so this is half-away rounding
    lut = np.empty(LEVELS, np.uint8)
    for a, b, v in zip(lo, hi, means):
        lut[a:b] = v
    return lut


def segment_image(img: GrayImage, t, ctx: ObjectiveContext) -> GrayImage:
    lut = class_mean_lut(t, ctx)
    return GrayImage(img.width, img.height, lut[img.pixels])


def _check_dims(x: GrayImage, y: GrayImage):
    if (x.width, x.height) != (y.width, y.height):
        raise ValueError(
            f"dimension mismatch: {x.width}x{x.height} vs {y.width}x{y.height}"
        )


def psnr(x: GrayImage, y: GrayImage) -> tuple[float, float]:
    """Return ``(mse, psnr)``; identical images give ``psnr == inf``."""
    _check_dims(x, y)
    diff = x.pixels.astype(np.float64) - y.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return 0.0, math.inf
    return mse, 10.0 * math.log10(MAXVAL**2 / mse)


def ssim(x: GrayImage, y: GrayImage) -> float:
    """Structural similarity from whole-image statistics (no sliding window)."""
    _check_dims(x, y)
    if x.size < 2:
        raise ValueError("SSIM needs at least two pixels")
    a = x.pixels.astype(np.float64).ravel()
    b = y.pixels.astype(np.float64).ravel()
    mx, my = a.mean(), b.mean()
    da, db = a - mx, b - my
    vx, vy = np.mean(da * da), np.mean(db * db)
    cov = np.mean(da * db)
    num = (2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
    return float(num / den)


def quality(x: GrayImage, y: GrayImage) -> QualityReport:
    mse, p = psnr(x, y)
    return QualityReport(psnr=p, ssim=ssim(x, y), mse=mse)

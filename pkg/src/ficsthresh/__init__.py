"""Multilevel Otsu image thresholding with cuckoo search, fully informed
cuckoo search and fully informed PSO."""

from .imaging import GrayImage, Histogram, compute_histogram, load_image, save_image
from .objective import build_context, decode_position, exhaustive_search, otsu_value
from .optimizer import OptimizerConfig, RunRecord, run
from .segmetrics import psnr, segment_image, ssim

__version__ = "0.1.0"

__all__ = [
    "GrayImage",
    "Histogram",
    "OptimizerConfig",
    "RunRecord",
    "build_context",
    "compute_histogram",
    "decode_position",
    "exhaustive_search",
    "load_image",
    "otsu_value",
    "psnr",
    "run",
    "save_image",
    "segment_image",
    "ssim",
]

"""Grayscale PGM input/output and 256-bin histograms."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

LEVELS = 256
MAXVAL = 255


class PGMError(ValueError):
    """Base class for malformed or unsupported PGM files."""


class PGMHeaderError(PGMError):
    pass


class UnsupportedMaxvalError(PGMError):
    pass


class TruncatedDataError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, stored row-major as a (height, width) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        arr = np.asarray(self.pixels)
        if arr.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} pixels, got {arr.size}"
            )
        if arr.size and (arr.min() < 0 or arr.max() > MAXVAL):
            raise ValueError("pixel values must lie in [0, 255]")
        arr = arr.astype(np.uint8).reshape(self.height, self.width)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_array(cls, arr) -> GrayImage:
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @property
    def size(self) -> int:
        return self.width * self.height

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.width, self.height, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (LEVELS,):
            raise ValueError(f"histogram needs {LEVELS} bins, got shape {counts.shape}")
        if (counts < 0).any():
            raise ValueError("histogram counts must be non-negative")
        if int(counts.sum()) != self.total or self.total <= 0:
            raise ValueError("histogram total must be positive and equal the sum of counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(self.total))

    @classmethod
    def from_counts(cls, counts) -> Histogram:
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts=counts, total=int(counts.sum()))

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.total

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return self.total == other.total and np.array_equal(self.counts, other.counts)


def compute_histogram(img: GrayImage) -> Histogram:
    counts = np.bincount(img.pixels.ravel(), minlength=LEVELS).astype(np.int64)
    return Histogram(counts=counts, total=img.size)


def _tokens(data: bytes):
    """Yield (token, end_offset) for whitespace-separated header tokens, skipping comments."""
    pos, n = 0, len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def _parse_int(tok: bytes, what: str) -> int:
    try:
        value = int(tok.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise PGMHeaderError(f"invalid {what}: {tok!r}") from None
    return value


def load_image(path: str | os.PathLike) -> GrayImage:
    """Read a P5 (binary) or P2 (plain) PGM with maxval 255.

    I/O problems surface as ``OSError``; malformed headers, unsupported maxval
    and short pixel payloads raise distinct ``PGMError`` subclasses.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    toks = _tokens(data)
    header = []
    for tok, end in toks:
        header.append((tok, end))
        if len(header) == 4:
            break
    if not header:
        raise PGMHeaderError("empty file")
    magic = header[0][0]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"unsupported magic number {magic!r}; only P2/P5 grayscale is read")
    if len(header) < 4:
        raise PGMHeaderError("incomplete header")
    width = _parse_int(header[1][0], "width")
    height = _parse_int(header[2][0], "height")
    maxval = _parse_int(header[3][0], "maxval")
    if width < 1 or height < 1:
        raise PGMHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != MAXVAL:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}; only 255 is accepted")
    npix = width * height
    end = header[3][1]

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        payload = data[end + 1:end + 1 + npix]
        if len(payload) < npix:
            raise TruncatedDataError(f"expected {npix} pixel bytes, found {len(payload)}")
        pixels = np.frombuffer(payload, dtype=np.uint8)
    else:
        values = []
        for tok, _ in _tokens(data[end:]):
            values.append(_parse_int(tok, "pixel value"))
            if len(values) == npix:
                break
        if len(values) < npix:
            raise TruncatedDataError(f"expected {npix} pixel values, found {len(values)}")
        pixels = np.array(values, dtype=np.int64)
        if pixels.min() < 0 or pixels.max() > MAXVAL:
            raise PGMError("pixel value outside [0, 255]")
    return GrayImage(width=width, height=height, pixels=pixels)


def save_image(img: GrayImage, path: str | os.PathLike, plain: bool = False) -> None:
    """Write ``img`` as binary P5 (default) or plain P2."""
    if plain:
        rows = "\n".join(" ".join(str(v) for v in row) for row in img.pixels)
        blob = f"P2\n{img.width} {img.height}\n{MAXVAL}\n{rows}\n".encode("ascii")
    else:
        blob = f"P5\n{img.width} {img.height}\n{MAXVAL}\n".encode("ascii") + img.pixels.tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)

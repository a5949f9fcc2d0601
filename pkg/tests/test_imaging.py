import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ficsthresh.imaging import (
    GrayImage,
    PGMHeaderError,
    TruncatedDataError,
    UnsupportedMaxvalError,
    compute_histogram,
    load_image,
    save_image,
)


def write(tmp_path, name, blob):
    p = tmp_path / name
    p.write_bytes(blob)
    return p


def test_load_plain_pgm(tmp_path):
    img = load_image(write(tmp_path, "a.pgm", b"P2\n2 2\n255\n0 0 255 255"))
    assert img == GrayImage(2, 2, [0, 0, 255, 255])


def test_p5_matches_p2(tmp_path):
    p2 = load_image(write(tmp_path, "a.pgm", b"P2\n2 2\n255\n0 0 255 255"))
    p5 = load_image(write(tmp_path, "b.pgm", b"P5\n2 2\n255\n" + bytes([0, 0, 255, 255])))
    assert p2 == p5


def test_header_comments_skipped(tmp_path):
    blob = b"P5\n# made by hand\n3 1\n# depth\n255\n" + bytes([1, 2, 3])
    assert load_image(write(tmp_path, "c.pgm", blob)).pixels.tolist() == [[1, 2, 3]]


def test_p5_payload_may_start_with_whitespace_byte(tmp_path):
    blob = b"P5 2 1 255\n" + bytes([10, 32])
    assert load_image(write(tmp_path, "w.pgm", blob)).pixels.tolist() == [[10, 32]]


def test_unsupported_maxval(tmp_path):
    with pytest.raises(UnsupportedMaxvalError, match="unsupported maxval"):
        load_image(write(tmp_path, "d.pgm", b"P5\n1 1\n65535\n\x00\x00"))


@pytest.mark.parametrize(
    "blob",
    [b"P6\n1 1\n255\n\x00\x00\x00", b"P5\n1\n", b"P5\nx 1\n255\n\x00", b""],
)
def test_malformed_header(tmp_path, blob):
    with pytest.raises(PGMHeaderError):
        load_image(write(tmp_path, "e.pgm", blob))


@pytest.mark.parametrize("blob", [b"P5\n2 2\n255\n\x00\x01\x02", b"P2\n2 2\n255\n0 1 2"])
def test_truncated(tmp_path, blob):
    with pytest.raises(TruncatedDataError):
        load_image(write(tmp_path, "f.pgm", blob))


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.pgm")


@pytest.mark.parametrize("pixels,w,h", [([0], 1, 1), ([0, 0, 255, 255], 2, 2)])
@pytest.mark.parametrize("plain", [False, True])
def test_round_trip(tmp_path, pixels, w, h, plain):
    img = GrayImage(w, h, pixels)
    save_image(img, tmp_path / "r.pgm", plain=plain)
    assert load_image(tmp_path / "r.pgm") == img


def test_save_unwritable(tmp_path):
    with pytest.raises(OSError):
        save_image(GrayImage(1, 1, [0]), tmp_path / "missing" / "x.pgm")


def test_invalid_images_rejected():
    with pytest.raises(ValueError):
        GrayImage(2, 2, [0, 1, 2])
    with pytest.raises(ValueError):
        GrayImage(1, 1, [256])


def test_histogram_examples():
    h = compute_histogram(GrayImage(2, 2, [0, 0, 255, 255]))
    assert h.counts[0] == 2 and h.counts[255] == 2 and h.counts.sum() == 4 and h.total == 4
    h = compute_histogram(GrayImage(3, 3, [100] * 9))
    assert h.counts[100] == 9 and h.total == 9
    h = compute_histogram(GrayImage(16, 16, np.arange(256)))
    assert (h.counts == 1).all() and h.total == 256


images = st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
    lambda wh: arrays(np.uint8, (wh[1], wh[0])).map(GrayImage.from_array)
)


@given(images, st.randoms(use_true_random=False))
def test_histogram_properties(img, rnd):
    h = compute_histogram(img)
    assert h.counts.sum() == img.width * img.height == h.total
    flat = img.pixels.ravel().tolist()
    rnd.shuffle(flat)
    shuffled = GrayImage(img.width, img.height, flat)
    assert compute_histogram(shuffled) == h


@settings(max_examples=30)
@given(images, st.booleans())
def test_save_load_identity(tmp_path_factory, img, plain):
    path = tmp_path_factory.mktemp("rt") / "img.pgm"
    save_image(img, path, plain=plain)
    assert load_image(path) == img

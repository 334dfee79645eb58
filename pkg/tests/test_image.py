import numpy as np
import pytest

from masstrace.image import (
    Image,
    PgmParseError,
    flatten,
    read_pgm,
    resize_bilinear,
    unflatten,
    write_pgm,
)


def test_read_pgm_2x2():
    data = b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64])
    img = read_pgm(data)
    assert img.width == 2 and img.height == 2
    np.testing.assert_allclose(
        img.pixels.reshape(-1), [0.0, 1.0, 128 / 255, 64 / 255]
    )


def test_read_pgm_1x1_white():
    img = read_pgm(b"P5\n1 1\n255\n\xff")
    assert img.pixels[0, 0] == 1.0


def test_read_pgm_comments_and_16bit():
    data = b"P5\n# a comment\n2 1\n65535\n" + (0).to_bytes(2, "big") + (65535).to_bytes(2, "big")
    img = read_pgm(data)
    np.testing.assert_allclose(img.pixels.reshape(-1), [0.0, 1.0])


def test_read_pgm_truncated_payload():
    with pytest.raises(PgmParseError, match="truncated"):
        read_pgm(b"P5\n2 2\n255\n\x00\x01")


def test_read_pgm_bad_magic():
    with pytest.raises(PgmParseError, match="magic"):
        read_pgm(b"P6\n1 1\n255\n\x00")


def test_read_pgm_bad_maxval():
    with pytest.raises(PgmParseError, match="maxval"):
        read_pgm(b"P5\n1 1\n70000\n\x00\x00")


def test_write_pgm_extremes():
    assert write_pgm(Image(np.array([[0.0]])))[-1:] == b"\x00"
    assert write_pgm(Image(np.array([[1.0]])))[-1:] == b"\xff"


def test_pgm_round_trip_quantization_bound():
    rng = np.random.default_rng(42)
    img = Image(rng.uniform(0, 1, size=(8, 8)))
    back = read_pgm(write_pgm(img))
    assert np.abs(back.pixels - img.pixels).max() <= 1 / 510


def test_resize_constant():
    img = Image(np.full((3, 5), 0.7))
    out = resize_bilinear(img, 11, 9)
    assert out.width == 11 and out.height == 9
    np.testing.assert_allclose(out.pixels, 0.7)


def test_resize_identity_bitwise():
    rng = np.random.default_rng(0)
    img = Image(rng.uniform(0, 1, size=(6, 4)))
    out = resize_bilinear(img, 4, 6)
    assert np.array_equal(out.pixels, img.pixels)


def test_resize_2x1_hand_computed():
    # endpoints aligned: target coords map to source x = 0, 1/3, 2/3, 1
    img = Image(np.array([[0.0, 1.0]]))
    out = resize_bilinear(img, 4, 1)
    expected = np.array([[0.0, 1 / 3, 2 / 3, 1.0]])
    np.testing.assert_allclose(out.pixels, expected, atol=1e-15)
    assert np.all(np.diff(out.pixels[0]) >= 0)


def test_resize_range_preserved():
    rng = np.random.default_rng(7)
    for _ in range(20):
        img = Image(rng.uniform(0, 1, size=(5, 7)))
        out = resize_bilinear(img, 13, 3)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_resize_zero_dim_rejected():
    img = Image(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        resize_bilinear(img, 0, 4)


def test_flatten_row_major():
    img = Image(np.array([[0.1, 0.2], [0.3, 0.4]]))
    np.testing.assert_array_equal(flatten(img), [0.1, 0.2, 0.3, 0.4])
    row = Image(np.array([[0.5, 0.6, 0.7]]))
    np.testing.assert_array_equal(flatten(row), [0.5, 0.6, 0.7])


def test_flatten_unflatten_identity():
    rng = np.random.default_rng(3)
    for _ in range(25):
        h, w = rng.integers(1, 9, size=2)
        img = Image(rng.uniform(0, 1, size=(h, w)))
        back = unflatten(flatten(img), int(w), int(h))
        assert np.array_equal(back.pixels, img.pixels)


def test_flatten_index_mapping():
    rng = np.random.default_rng(5)
    img = Image(rng.uniform(0, 1, size=(4, 6)))
    flat = flatten(img)
    for j in range(flat.size):
        assert flat[j] == img.pixels[j // img.width, j % img.width]


def test_image_invariants():
    with pytest.raises(ValueError):
        Image(np.array([[1.5]]))
    with pytest.raises(ValueError):
        Image(np.array([[-0.1]]))

"""Grayscale image container, binary PGM (P5) I/O, bilinear resize, flattening.

Images hold float64 intensities in [0, 1], row-major. The flat pixel index j
maps to coordinates via (row, col) = (j // width, j % width).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PgmParseError(ValueError):
    """Malformed PGM byte stream; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Image:
    """2-D grayscale raster with intensities in [0, 1]."""

    pixels: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel intensities must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class PixelCoord:
    """Integer pixel coordinate, (col, row) ordering."""

    col: int
    row: int

    def in_bounds(self, width: int, height: int) -> bool:
        return 0 <= self.col < width and 0 <= self.row < height


@dataclass(frozen=True)
class BinaryMask:
    """Boolean per-pixel mask with the same geometry as the image it annotates."""

    bits: np.ndarray  # shape (height, width), bool

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2 or b.size == 0:
            raise ValueError("bits must be a non-empty 2-D array")
        object.__setattr__(self, "bits", b)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


_WHITESPACE = b" \t\r\n\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in b"#":
            while pos < n and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmParseError("unexpected end of header", pos)
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE + b"#":
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, name: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    try:
        value = int(tok)
    except ValueError:
        raise PgmParseError(f"invalid {name} field {tok!r}", pos - len(tok)) from None
    return value, pos


def read_pgm(data: bytes) -> Image:
    """Decode a binary PGM (magic P5, maxval <= 65535) into an Image in [0, 1]."""
    if data[:2] != b"P5":
        raise PgmParseError(f"unsupported magic {data[:2]!r}, expected b'P5'", 0)
    pos = 2
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"invalid dimensions {width}x{height}", pos)
    if not 1 <= maxval <= 65535:
        raise PgmParseError(f"maxval {maxval} out of range [1, 65535]", pos)
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PgmParseError("expected single whitespace after maxval", pos)
    pos += 1

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    if len(data) - pos < need:
        raise PgmParseError(
            f"truncated payload: need {need} bytes, have {len(data) - pos}",
            len(data),
        )
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    pixels = raw.reshape(height, width).astype(np.float64) / maxval
    return Image(np.clip(pixels, 0.0, 1.0))


def write_pgm(img: Image) -> bytes:
    """Encode an Image as 8-bit binary PGM."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    payload = np.rint(img.pixels * 255.0).astype(np.uint8).tobytes()
    return header + payload


def write_mask_pgm(mask: BinaryMask) -> bytes:
    """Encode a BinaryMask as a {0, 255}-valued 8-bit PGM."""
    return write_pgm(Image(mask.bits.astype(np.float64)))


def read_mask_pgm(data: bytes) -> BinaryMask:
    """Decode a PGM into a BinaryMask (any intensity >= 0.5 counts as set)."""
    return BinaryMask(read_pgm(data).pixels >= 0.5)


def _axis_coords(old: int, new: int) -> np.ndarray:
    if new == 1:
        return np.zeros(1)
    return np.arange(new) * ((old - 1) / (new - 1))


def resize_bilinear(img: Image, new_w: int, new_h: int) -> Image:
    """Resize with separable bilinear interpolation (endpoints aligned)."""
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {new_w}x{new_h}")
    if new_w == img.width and new_h == img.height:
        return Image(img.pixels.copy())

    xs = _axis_coords(img.width, new_w)
    ys = _axis_coords(img.height, new_h)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = xs - x0
    fy = ys - y0

    p = img.pixels
    top = p[y0][:, x0] * (1 - fx) + p[y0][:, x1] * fx
    bot = p[y1][:, x0] * (1 - fx) + p[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return Image(np.clip(out, 0.0, 1.0))


def flatten(img: Image) -> np.ndarray:
    """Row-major flattening: flatten(img)[row * width + col] == pixel(row, col)."""
    return img.pixels.reshape(-1).copy()


def unflatten(vec: np.ndarray, width: int, height: int) -> Image:
    """Inverse of flatten for a vector of length width * height."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (width * height,):
        raise ValueError(f"expected vector of length {width * height}, got {v.shape}")
    return Image(v.reshape(height, width))

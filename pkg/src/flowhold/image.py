"""Grayscale raster type, binary PGM I/O, sub-pixel sampling, gradients.

Everything downstream (corners, flow, rendering) works on GrayImage:
a float64 raster normalized to [0, 1]. Eight-bit quantization exists
only at the PGM boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GrayImage",
    "GradientField",
    "PgmError",
    "load_pgm",
    "save_pgm",
    "sample_bilinear",
    "sobel_gradients",
]

_WHITESPACE = b" \t\n\r\x0b\x0c"


class PgmError(ValueError):
    """Malformed PGM data; the message names the offending field."""


@dataclass(frozen=True)
class GrayImage:
    """Immutable grayscale raster with intensities in [0, 1].

    ``pixels`` is indexed [row, col], i.e. [y, x]; shape is (height, width).
    The constructor takes ownership of the array and freezes it.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-d array, got shape {px.shape}")
        if not np.isfinite(px).all():
            raise ValueError("pixel intensities must be finite")
        lo, hi = float(px.min()), float(px.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"pixel intensities must lie in [0, 1], got range [{lo}, {hi}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value: float) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.float64))


@dataclass(frozen=True)
class GradientField:
    """Per-pixel horizontal (ix) and vertical (iy) intensity derivatives."""

    ix: np.ndarray
    iy: np.ndarray

    def __post_init__(self) -> None:
        if self.ix.shape != self.iy.shape:
            raise ValueError("ix and iy must have identical shapes")
        self.ix.setflags(write=False)
        self.iy.setflags(write=False)


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # Skips whitespace and '#' comment lines, then reads one token.
    n = len(buf)
    while pos < n:
        ch = buf[pos : pos + 1]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == b"#":
            while pos < n and buf[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WHITESPACE:
        pos += 1
    return buf[start:pos], pos


def _int_token(buf: bytes, pos: int, field: str) -> tuple[int, int]:
    tok, pos = _next_token(buf, pos)
    if not tok:
        raise PgmError(f"{field}: missing header field")
    try:
        value = int(tok)
    except ValueError:
        raise PgmError(f"{field}: expected an integer, got {tok!r}") from None
    return value, pos


def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) PGM byte string into a GrayImage.

    Pixel value v maps to intensity v / maxval. Header comments starting
    with '#' are allowed; only maxval <= 255 (single-byte payload) is
    supported.
    """
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise PgmError(f"magic: expected b'P5', got {magic!r}")
    width, pos = _int_token(data, pos, "width")
    if width < 1:
        raise PgmError(f"width: must be positive, got {width}")
    height, pos = _int_token(data, pos, "height")
    if height < 1:
        raise PgmError(f"height: must be positive, got {height}")
    maxval, pos = _int_token(data, pos, "maxval")
    if not 1 <= maxval <= 255:
        raise PgmError(f"maxval: must lie in [1, 255], got {maxval}")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PgmError("payload: expected a single whitespace byte after maxval")
    pos += 1
    need = width * height
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise PgmError(f"payload: truncated, expected {need} bytes, got {len(payload)}")
    raw = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return GrayImage((raw / maxval).reshape(height, width))


def save_pgm(image: GrayImage) -> bytes:
    """Encode as binary PGM with maxval 255 (intensities rounded to 8 bits)."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    body = np.rint(image.pixels * 255.0).astype(np.uint8).tobytes()
    return header + body


def bilinear_many(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized bilinear sampling. Coordinates must be in bounds already."""
    h, w = pixels.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    np.clip(x0, 0, max(w - 2, 0), out=x0)
    np.clip(y0, 0, max(h - 2, 0), out=y0)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = pixels[y0, x0] * (1.0 - fx) + pixels[y0, x1] * fx
    bot = pixels[y1, x0] * (1.0 - fx) + pixels[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def sample_bilinear(image: GrayImage, x: float, y: float) -> float:
    """Bilinear blend of the 4 pixels surrounding (x, y).

    Exact at integer coordinates. Raises ValueError outside
    [0, width-1] x [0, height-1]; callers clamp or reject first.
    """
    if not 0.0 <= x <= image.width - 1:
        raise ValueError(f"x={x} outside [0, {image.width - 1}]")
    if not 0.0 <= y <= image.height - 1:
        raise ValueError(f"y={y} outside [0, {image.height - 1}]")
    return float(bilinear_many(image.pixels, np.asarray([x]), np.asarray([y]))[0])


def sobel_gradients(image: GrayImage) -> GradientField:
    """3x3 Sobel derivatives scaled by 1/8, borders by edge replication.

    The 1/8 normalization makes a unit-slope ramp produce gradient 1.0
    per pixel in the interior.
    """
    if image.width < 3 or image.height < 3:
        raise ValueError(f"image must be at least 3x3, got {image.width}x{image.height}")
    p = np.pad(image.pixels, 1, mode="edge")
    ix = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    ) / 8.0
    iy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    ) / 8.0
    return GradientField(ix=ix, iy=iy)

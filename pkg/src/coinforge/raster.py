"""8-bit raster images and the pixel-level transforms used by the pipeline.

A Raster is an immutable H x W x C block of 8-bit samples (C is 1 for
grayscale, 3 for RGB). All transforms are pure functions; pixel-producing
arithmetic rounds half-up so results are reproducible bit-exactly.

PGM (P5) and PPM (P6) with maxval 255 are the interchange formats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FillValue = tuple[int, ...]


def round_half_up(x):
    """Round to nearest integer, halves away from zero (inputs are >= 0 here)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class Raster:
    """Immutable 8-bit image. `data` has shape (height, width, channels)."""

    width: int
    height: int
    channels: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad dimensions {self.width}x{self.height}")
        if self.data.dtype != np.uint8:
            raise ValueError(f"data must be uint8, got {self.data.dtype}")
        if self.data.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"data shape {self.data.shape} does not match "
                f"{self.height}x{self.width}x{self.channels}"
            )
        self.data.flags.writeable = False

    @classmethod
    def from_array(cls, arr) -> "Raster":
        """Build from a (H, W) or (H, W, C) uint8-compatible array."""
        a = np.asarray(arr)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3:
            raise ValueError(f"expected 2-d or 3-d array, got shape {a.shape}")
        a = np.ascontiguousarray(a, dtype=np.uint8)
        h, w, c = a.shape
        return cls(width=w, height=h, channels=c, data=a)

    def plane(self) -> np.ndarray:
        """The (H, W) view of a single-channel image."""
        if self.channels != 1:
            raise ValueError("plane() requires a 1-channel image")
        return self.data[:, :, 0]

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.data, other.data)
        )


def _finish_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(round_half_up(values), 0, 255).astype(np.uint8)


def to_grayscale(img: Raster) -> Raster:
    """BT.601 luma conversion: round(0.299 R + 0.587 G + 0.114 B)."""
    if img.channels != 3:
        raise ValueError(f"to_grayscale needs a 3-channel image, got {img.channels}")
    rgb = img.data.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return Raster.from_array(_finish_u8(luma))


def resize_bilinear(img: Raster, out_w: int, out_h: int) -> Raster:
    """Resample to out_w x out_h with bilinear interpolation.

    Source positions use the half-pixel-center convention
    src = (dst + 0.5) * in/out - 0.5, clamped to the valid range (no
    wraparound). Requesting the input size returns a bit-identical image.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"bad target size {out_w}x{out_h}")
    src = img.data.astype(np.float64)
    h, w = img.height, img.width

    sx = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    sy = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[None, :, None]
    fy = (sy - y0)[:, None, None]

    top = src[y0[:, None], x0[None, :]] * (1 - fx) + src[y0[:, None], x1[None, :]] * fx
    bot = src[y1[:, None], x0[None, :]] * (1 - fx) + src[y1[:, None], x1[None, :]] * fx
    out = top * (1 - fy) + bot * fy
    return Raster.from_array(_finish_u8(out))


def corner_fill_value(img: Raster) -> FillValue:
    """Per-channel rounded mean of the four corner pixels."""
    corners = img.data[[0, 0, -1, -1], [0, -1, 0, -1], :].astype(np.float64)
    mean = corners.mean(axis=0)
    return tuple(int(v) for v in _finish_u8(mean))


def rotate(img: Raster, degrees: float, fill: FillValue) -> Raster:
    """Rotate counter-clockwise about the image center, same output frame.

    Output pixels are inverse-mapped and sampled bilinearly; samples whose
    source position falls outside the frame take `fill` (one value per
    channel). Multiples of 360 return a bit-identical copy.
    """
    if len(fill) != img.channels:
        raise ValueError(f"fill has {len(fill)} values for {img.channels} channels")
    if degrees % 360 == 0:
        return Raster.from_array(img.data.copy())

    h, w = img.height, img.width
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    theta = np.radians(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    xs = np.arange(w, dtype=np.float64) - cx
    ys = np.arange(h, dtype=np.float64) - cy
    dx = np.broadcast_to(xs[None, :], (h, w))
    dy = np.broadcast_to(ys[:, None], (h, w))
    # inverse of the y-down CCW rotation
    src_x = cos_t * dx - sin_t * dy + cx
    src_y = sin_t * dx + cos_t * dy + cy

    inside = (src_x >= 0) & (src_x <= w - 1) & (src_y >= 0) & (src_y <= h - 1)
    sxc = np.clip(src_x, 0, w - 1)
    syc = np.clip(src_y, 0, h - 1)
    x0 = np.floor(sxc).astype(np.intp)
    y0 = np.floor(syc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sxc - x0)[:, :, None]
    fy = (syc - y0)[:, :, None]

    src = img.data.astype(np.float64)
    top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
    bot = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
    out = _finish_u8(top * (1 - fy) + bot * fy)
    out[~inside] = np.asarray(fill, dtype=np.uint8)
    return Raster.from_array(out)


def adjust_brightness(img: Raster, factor: float) -> Raster:
    """Scale every sample by `factor`, rounding half-up and clamping to [0, 255]."""
    if not factor > 0:
        raise ValueError(f"brightness factor must be positive, got {factor}")
    return Raster.from_array(_finish_u8(img.data.astype(np.float64) * factor))


# --- PGM / PPM interchange -------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n\r]*[\n\r]\s*)*(\S+)")


def write_pnm(img: Raster, path) -> None:
    """Write a binary PGM (P5, grayscale) or PPM (P6, RGB) with maxval 255."""
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
    Path(path).write_bytes(header + img.data.tobytes())


def read_pnm(path) -> Raster:
    """Read a binary P5/P6 file written by write_pnm (comments tolerated)."""
    raw = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise ValueError(f"{path}: truncated header")
        fields.append(m.group(1))
        pos = m.end()
    magic, w_s, h_s, maxval_s = fields
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: unsupported magic {magic!r}")
    channels = 1 if magic == b"P5" else 3
    try:
        w, h, maxval = int(w_s), int(h_s), int(maxval_s)
    except ValueError:
        raise ValueError(f"{path}: malformed header") from None
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = w * h * channels
    pixels = raw[pos : pos + expected]
    if len(pixels) != expected:
        raise ValueError(f"{path}: expected {expected} pixel bytes, got {len(pixels)}")
    arr = np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, channels)
    return Raster(width=w, height=h, channels=channels, data=arr.copy())

"""Synthetic coin-like fixtures: discs with known geometry and class glyphs.

The generators are their own ground truth (center, radius, and label are
chosen first, pixels follow), which makes them usable as oracles for the
detector and for end-to-end training checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import Raster

DENOMINATIONS = (1, 2, 5)
SIDES = ("obverse", "reverse")


def disc_image(
    width: int,
    height: int,
    cx: float,
    cy: float,
    radius: float,
    fg: int = 200,
    bg: int = 30,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Raster:
    """Hard-edged filled disc on a flat background, optional Gaussian noise."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
    arr = np.where(inside, float(fg), float(bg))
    if noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        arr = arr + rng.normal(0.0, noise_sigma, arr.shape)
    return Raster.from_array(np.clip(np.rint(arr), 0, 255))


@dataclass(frozen=True)
class CoinSpec:
    denomination: int  # 1, 2 or 5
    side: str  # "obverse" | "reverse"

    @property
    def class6(self) -> int:
        # fixed order: 1rev, 2rev, 5rev, 1obv, 2obv, 5obv
        base = DENOMINATIONS.index(self.denomination)
        return base if self.side == "reverse" else base + 3


def coin_image(
    spec: CoinSpec,
    size: int = 150,
    cx: float | None = None,
    cy: float | None = None,
    radius: float = 55.0,
    fg: int = 200,
    bg: int = 30,
    noise_sigma: float = 4.0,
    rng: np.random.Generator | None = None,
) -> Raster:
    """Disc with a class-identifying glyph.

    The denomination sets the number of dark bars on the face (1, 2 or 5);
    the reverse side additionally carries a concentric ring. Grayscale,
    cleaned-image format.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if cx is None:
        cx = (size - 1) / 2.0
    if cy is None:
        cy = (size - 1) / 2.0

    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r2 = (xx - cx) ** 2 + (yy - cy) ** 2
    arr = np.where(r2 <= radius**2, float(fg), float(bg))

    # glyph bars, count = denomination, centered on the face
    n_bars = spec.denomination
    bar_w = max(3, int(radius * 0.12))
    bar_h = int(radius * 0.7)
    pitch = max(bar_w + 3, int(radius * 0.28))
    x_start = cx - pitch * (n_bars - 1) / 2.0
    for i in range(n_bars):
        bx = x_start + i * pitch
        bar = (
            (np.abs(xx - bx) <= bar_w / 2.0)
            & (np.abs(yy - cy) <= bar_h / 2.0)
            & (r2 <= (radius * 0.85) ** 2)
        )
        arr[bar] = 60.0

    if spec.side == "reverse":
        ring = (r2 >= (radius * 0.80) ** 2) & (r2 <= (radius * 0.90) ** 2)
        arr[ring] = 60.0

    if noise_sigma > 0:
        arr = arr + rng.normal(0.0, noise_sigma, arr.shape)
    return Raster.from_array(np.clip(np.rint(arr), 0, 255))


def coin_dataset(
    images_per_class: int, size: int = 150, seed: int = 0
) -> tuple[list[Raster], np.ndarray]:
    """Cleaned-format images for all six classes, with 6-class labels.

    Geometry, contrast and noise vary per image so grouped splits still
    see unseen instances. Images are ordered class-major.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for denomination in DENOMINATIONS:
        for side in SIDES:
            spec = CoinSpec(denomination, side)
            for _ in range(images_per_class):
                img = coin_image(
                    spec,
                    size=size,
                    cx=(size - 1) / 2.0 + rng.uniform(-6, 6),
                    cy=(size - 1) / 2.0 + rng.uniform(-6, 6),
                    radius=rng.uniform(size * 0.30, size * 0.42),
                    fg=int(rng.integers(170, 230)),
                    bg=int(rng.integers(15, 50)),
                    noise_sigma=rng.uniform(2.0, 6.0),
                    rng=rng,
                )
                images.append(img)
                labels.append(spec.class6)
    return images, np.asarray(labels, dtype=np.int64)

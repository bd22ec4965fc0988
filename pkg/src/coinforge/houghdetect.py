"""Coin localization via a circle Hough transform, plus the cleaning step.

Edge pixels (Sobel magnitude above a relative threshold) vote for candidate
(cx, cy, r) triples over a radius sweep; accumulator peaks above the vote
threshold survive non-maximum suppression and come back sorted by score.
Cleaning crops a margin-padded square around the best circle, resizes to
150x150 and converts to grayscale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .raster import Raster, corner_fill_value, resize_bilinear, to_grayscale

CLEAN_SIZE = 150
DEFAULT_MARGIN = 1.10


class NoCoinFound(Exception):
    """No accumulator peak reached the vote threshold."""

    def __init__(self, best_score: int):
        super().__init__(f"no circle above threshold (best score {best_score})")
        self.best_score = best_score


@dataclass(frozen=True)
class CircleHit:
    cx: int
    cy: int
    radius: int
    score: int


@dataclass(frozen=True)
class DetectParams:
    blur_radius: int = 1
    edge_threshold_rel: float = 0.25
    r_min_frac: float = 0.20
    r_max_frac: float = 0.48
    radius_step: int = 1
    # None: derived per image as round(0.5 * 2*pi*r_min)
    vote_threshold: int | None = None

    def __post_init__(self):
        if not 0 < self.r_min_frac < self.r_max_frac <= 0.5:
            raise ValueError(
                f"need 0 < r_min_frac < r_max_frac <= 0.5, "
                f"got {self.r_min_frac}, {self.r_max_frac}"
            )
        if not 0 < self.edge_threshold_rel < 1:
            raise ValueError(f"edge_threshold_rel must be in (0,1), got {self.edge_threshold_rel}")
        if self.radius_step < 1:
            raise ValueError(f"radius_step must be >= 1, got {self.radius_step}")
        if self.blur_radius < 0:
            raise ValueError(f"blur_radius must be >= 0, got {self.blur_radius}")


def box_blur(a: np.ndarray, radius: int) -> np.ndarray:
    """Mean filter with window (2*radius+1)^2 and edge-clamped borders."""
    if radius <= 0:
        return a.astype(np.float64)
    k = 2 * radius + 1
    p = np.pad(a.astype(np.float64), radius, mode="edge")
    c = np.cumsum(np.cumsum(p, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    s = c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]
    return s / (k * k)


def _sobel_magnitude(a: np.ndarray) -> np.ndarray:
    p = np.pad(a.astype(np.float64), 1, mode="edge")
    dx = p[:, 2:] - p[:, :-2]
    gx = dx[:-2, :] + 2 * dx[1:-1, :] + dx[2:, :]
    dy = p[2:, :] - p[:-2, :]
    gy = dy[:, :-2] + 2 * dy[:, 1:-1] + dy[:, 2:]
    return np.hypot(gx, gy)


def sobel_magnitude(img: Raster) -> np.ndarray:
    """Gradient magnitude from 3x3 Sobel kernels, edge-clamped borders."""
    if img.channels != 1:
        raise ValueError("sobel_magnitude expects a grayscale image")
    return _sobel_magnitude(img.plane())


@lru_cache(maxsize=256)
def _circle_offsets(radius: int) -> np.ndarray:
    """Integer (dx, dy) offsets on the midpoint circle of this radius."""
    x, y, d = radius, 0, 1 - radius
    pts = set()
    while x >= y:
        pts.update(
            {(x, y), (y, x), (-x, y), (-y, x), (x, -y), (y, -x), (-x, -y), (-y, -x)}
        )
        y += 1
        if d < 0:
            d += 2 * y + 1
        else:
            x -= 1
            d += 2 * (y - x) + 1
    arr = np.array(sorted(pts), dtype=np.intp)
    arr.flags.writeable = False
    return arr


def _radius_sweep(params: DetectParams, w: int, h: int) -> list[int]:
    m = min(w, h)
    r_min = max(1, int(math.floor(params.r_min_frac * m + 0.5)))
    r_max = int(math.floor(params.r_max_frac * m + 0.5))
    return list(range(r_min, max(r_min, r_max) + 1, params.radius_step))


def _vote_threshold(params: DetectParams, r_min: int) -> int:
    if params.vote_threshold is not None:
        return params.vote_threshold
    return int(math.floor(0.5 * 2 * math.pi * r_min + 0.5))


def _accumulate(gray: np.ndarray, params: DetectParams):
    """Collect accumulator cells at or above the vote threshold.

    Votes land in a frame padded by the largest radius so no bounds mask
    is needed; only the unpadded region is searched for peaks. Returns
    (candidates as an (n, 4) array of [score, r, cy, cx], best_score).
    """
    h, w = gray.shape
    radii = _radius_sweep(params, w, h)
    threshold = max(1, _vote_threshold(params, radii[0]))

    mag = _sobel_magnitude(box_blur(gray, params.blur_radius))
    mmax = mag.max()
    empty = np.zeros((0, 4), dtype=np.int64)
    if mmax <= 0:
        return empty, 0
    ys, xs = np.nonzero(mag > params.edge_threshold_rel * mmax)
    if xs.size == 0:
        return empty, 0

    pad = max(radii)
    w2 = w + 2 * pad
    xs32 = (xs + pad).astype(np.int32)
    ys32 = (ys + pad).astype(np.int32)

    best = 0
    rows = []
    for r in radii:
        off = _circle_offsets(r).astype(np.int32)
        flat = (ys32[:, None] + off[None, :, 1]) * w2 + (xs32[:, None] + off[None, :, 0])
        acc = np.bincount(flat.ravel(), minlength=(h + 2 * pad) * w2)
        acc = acc.reshape(h + 2 * pad, w2)[pad : pad + h, pad : pad + w]
        peak = int(acc.max())
        if peak > best:
            best = peak
        cy, cx = np.nonzero(acc >= threshold)
        if cy.size:
            rows.append(
                np.column_stack([acc[cy, cx], np.full(cy.size, r), cy, cx]).astype(np.int64)
            )
    cand = np.concatenate(rows, axis=0) if rows else empty
    return cand, best


def hough_circles(img: Raster, params: DetectParams = DetectParams()) -> list[CircleHit]:
    """Detected circles sorted by score descending.

    Ties break toward the smaller radius, then row-major center position.
    Suppression removes candidates within radius_step in r and 2 px in
    (cx, cy) of an already accepted, higher-ranked peak.
    """
    if img.channels != 1:
        raise ValueError("hough_circles expects a grayscale image")
    hits, _ = _detect(img.plane(), params)
    return hits


def _detect(gray: np.ndarray, params: DetectParams):
    cand, best = _accumulate(gray, params)
    if cand.shape[0] == 0:
        return [], best

    scores, rs, cys, cxs = cand[:, 0], cand[:, 1], cand[:, 2], cand[:, 3]
    order = np.lexsort((cxs, cys, rs, -scores))

    # greedy suppression via an occupancy grid: accepting (r, cy, cx)
    # blocks every cell within radius_step in r and 2 px in cy, cx, which
    # is exactly the pairwise |delta| test against accepted peaks
    h, w = gray.shape
    radii = _radius_sweep(params, w, h)
    r_index = {r: i for i, r in enumerate(radii)}
    blocked = np.zeros((len(radii), h, w), dtype=bool)

    accepted: list[CircleHit] = []
    for j in order:
        r, cy, cx, sc = int(rs[j]), int(cys[j]), int(cxs[j]), int(scores[j])
        ri = r_index[r]
        if blocked[ri, cy, cx]:
            continue
        accepted.append(CircleHit(cx=cx, cy=cy, radius=r, score=sc))
        blocked[
            max(0, ri - 1) : ri + 2,
            max(0, cy - 2) : cy + 3,
            max(0, cx - 2) : cx + 3,
        ] = True
    return accepted, best


def detect_coin(img: Raster, params: DetectParams = DetectParams()) -> CircleHit:
    """The single best circle; raises NoCoinFound below threshold."""
    gray = to_grayscale(img) if img.channels == 3 else img
    hits, best = _detect(gray.plane(), params)
    if not hits:
        raise NoCoinFound(best)
    return hits[0]


def _refine_center(gray: np.ndarray, hit: CircleHit, params: DetectParams):
    """Sub-pixel center: vote-weighted centroid around the accumulator peak.

    The accumulator quantizes centers to whole pixels; that error scales
    up with the crop-to-output resize, so cropping uses this refinement.
    """
    h, w = gray.shape
    mag = _sobel_magnitude(box_blur(gray, params.blur_radius))
    mmax = mag.max()
    if mmax <= 0:
        return float(hit.cx), float(hit.cy)
    ys, xs = np.nonzero(mag > params.edge_threshold_rel * mmax)

    pad = hit.radius
    w2 = w + 2 * pad
    off = _circle_offsets(hit.radius).astype(np.int32)
    flat = ((ys + pad).astype(np.int32)[:, None] + off[None, :, 1]) * w2 + (
        (xs + pad).astype(np.int32)[:, None] + off[None, :, 0]
    )
    acc = np.bincount(flat.ravel(), minlength=(h + 2 * pad) * w2)
    acc = acc.reshape(h + 2 * pad, w2)[pad : pad + h, pad : pad + w]

    y0, y1 = max(0, hit.cy - 2), min(h, hit.cy + 3)
    x0, x1 = max(0, hit.cx - 2), min(w, hit.cx + 3)
    win = acc[y0:y1, x0:x1].astype(np.float64)
    total = win.sum()
    if total <= 0:
        return float(hit.cx), float(hit.cy)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    return float((xx * win).sum() / total), float((yy * win).sum() / total)


def clean_image(
    img: Raster, params: DetectParams = DetectParams(), margin: float = DEFAULT_MARGIN
) -> Raster:
    """Center, crop, resize and grayscale a coin photograph.

    The crop is a square of side 2*radius*margin around the detected
    center; parts outside the frame take the source's corner fill value.
    Output is exactly 150x150x1.
    """
    hit = detect_coin(img, params)
    gray = to_grayscale(img) if img.channels == 3 else img
    cxf, cyf = _refine_center(gray.plane(), hit, params)
    side = max(1, int(math.floor(2 * hit.radius * margin + 0.5)))
    # land the refined center on the crop's central sample (side-1)/2
    x0 = int(math.floor(cxf - (side - 1) / 2 + 0.5))
    y0 = int(math.floor(cyf - (side - 1) / 2 + 0.5))

    fill = corner_fill_value(img)
    canvas = np.empty((side, side, img.channels), dtype=np.uint8)
    canvas[:, :] = np.asarray(fill, dtype=np.uint8)

    sx0, sy0 = max(0, x0), max(0, y0)
    sx1, sy1 = min(img.width, x0 + side), min(img.height, y0 + side)
    if sx1 > sx0 and sy1 > sy0:
        canvas[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = img.data[sy0:sy1, sx0:sx1]

    out = resize_bilinear(Raster.from_array(canvas), CLEAN_SIZE, CLEAN_SIZE)
    if out.channels == 3:
        out = to_grayscale(out)
    return out

"""Seeded region growing and bounding-box extraction.

Growth is breadth-first from the seed with a FIFO queue and row-major
neighbor enumeration, so identical inputs always produce identical masks. A
neighbor joins the region iff its intensity is within intensity_tolerance of
the running region mean. A safety cap on region size prevents whole-image
floods on low-contrast inputs; hitting the cap flags the result as truncated.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .image import BinaryMask, Image, PixelCoord

_NEIGHBORS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class RegionGrowConfig:
    intensity_tolerance: float = 0.1
    connectivity: int = 8
    max_region_fraction: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.intensity_tolerance <= 1.0:
            raise ValueError("intensity_tolerance must lie in [0, 1]")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if not 0.0 < self.max_region_fraction <= 1.0:
            raise ValueError("max_region_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class RoiResult:
    mask: BinaryMask
    bbox: tuple[int, int, int, int]  # (min_col, min_row, max_col, max_row)
    seed: PixelCoord
    truncated: bool


def region_grow(img: Image, seed: PixelCoord, cfg: RegionGrowConfig) -> RoiResult:
    """Grow a connected region from the seed by the running-mean criterion."""
    if not seed.in_bounds(img.width, img.height):
        raise ValueError(f"seed {seed} outside image {img.width}x{img.height}")
    offsets = _NEIGHBORS_4 if cfg.connectivity == 4 else _NEIGHBORS_8
    px = img.pixels
    h, w = px.shape
    cap = max(1, int(cfg.max_region_fraction * w * h))

    in_region = np.zeros((h, w), dtype=bool)
    in_region[seed.row, seed.col] = True
    total = px[seed.row, seed.col]
    count = 1
    truncated = False
    queue = deque([(seed.row, seed.col)])

    while queue and not truncated:
        r, c = queue.popleft()
        for dr, dc in offsets:
            nr, nc = r + dr, c + dc
            if nr < 0 or nr >= h or nc < 0 or nc >= w or in_region[nr, nc]:
                continue
            if abs(px[nr, nc] - total / count) <= cfg.intensity_tolerance:
                if count >= cap:
                    truncated = True
                    break
                in_region[nr, nc] = True
                total += px[nr, nc]
                count += 1
                queue.append((nr, nc))

    mask = BinaryMask(in_region)
    return RoiResult(mask=mask, bbox=bbox_of(mask), seed=seed, truncated=truncated)


def bbox_of(mask: BinaryMask) -> tuple[int, int, int, int]:
    """Tight axis-aligned bounds (min_col, min_row, max_col, max_row)."""
    rows, cols = np.nonzero(mask.bits)
    if rows.size == 0:
        raise ValueError("bbox_of requires a non-empty mask")
    return (int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max()))

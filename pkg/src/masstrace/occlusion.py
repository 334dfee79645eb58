"""Occlusion-sensitivity baseline: slide a fill patch over the image and
measure the drop in the classifier's probability for its original prediction.

The heatmap cell value is P_original - P_occluded, so larger values mark
regions whose removal hurts the prediction most. The argmax cell's centre
pixel feeds the shared region-growing pipeline as a seed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Image, PixelCoord, flatten
from .network import NetworkParams, forward, forward_batch

_CHUNK = 64  # occluded variants evaluated per batched forward pass


@dataclass(frozen=True)
class OcclusionConfig:
    patch_size: int = 16
    stride: int = 8
    fill_value: float = 0.0

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError("stride must lie in [1, patch_size]")
        if not 0.0 <= self.fill_value <= 1.0:
            raise ValueError("fill_value must lie in [0, 1]")


def grid_shape(img_w: int, img_h: int, cfg: OcclusionConfig) -> tuple[int, int]:
    """(rows, cols) of the occlusion grid covering the image."""
    if cfg.patch_size > img_w or cfg.patch_size > img_h:
        raise ValueError(
            f"patch {cfg.patch_size} does not fit in image {img_w}x{img_h}"
        )
    return (
        (img_h - cfg.patch_size) // cfg.stride + 1,
        (img_w - cfg.patch_size) // cfg.stride + 1,
    )


def occlusion_map(img: Image, params: NetworkParams, cfg: OcclusionConfig) -> np.ndarray:
    """Heatmap of probability drops, one cell per occlusion grid position."""
    j = params.dims[0]
    if img.width * img.height != j:
        raise ValueError(
            f"image {img.width}x{img.height} does not match network input J={j}"
        )
    rows, cols = grid_shape(img.width, img.height, cfg)
    base = forward(flatten(img), params)
    c = base.predicted
    p0 = base.p[c]

    cells = [
        (gy * cfg.stride, gx * cfg.stride)
        for gy in range(rows)
        for gx in range(cols)
    ]
    heat = np.empty(len(cells))
    for start in range(0, len(cells), _CHUNK):
        chunk = cells[start : start + _CHUNK]
        batch = np.empty((len(chunk), j))
        for k, (y0, x0) in enumerate(chunk):
            occluded = img.pixels.copy()
            occluded[y0 : y0 + cfg.patch_size, x0 : x0 + cfg.patch_size] = cfg.fill_value
            batch[k] = occluded.reshape(-1)
        _, _, _, p, _ = forward_batch(batch, params)
        heat[start : start + len(chunk)] = p0 - p[:, c]
    return heat.reshape(rows, cols)


def occlusion_seed(heatmap: np.ndarray, cfg: OcclusionConfig, img: Image) -> PixelCoord:
    """Centre pixel of the most influential grid cell; ties to lowest cell."""
    heatmap = np.asarray(heatmap)
    if heatmap.size == 0:
        raise ValueError("heatmap must be non-empty")
    idx = int(np.argmax(heatmap))
    gy, gx = divmod(idx, heatmap.shape[1])
    col = min(gx * cfg.stride + cfg.patch_size // 2, img.width - 1)
    row = min(gy * cfg.stride + cfg.patch_size // 2, img.height - 1)
    return PixelCoord(col=col, row=row)

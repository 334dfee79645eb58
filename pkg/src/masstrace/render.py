"""Overlay images (PGM) and report figures (matplotlib, written to files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .image import Image, PixelCoord


def mark_pixels(img: Image, coords: list[PixelCoord]) -> Image:
    """Copy of the image with the given pixels set to full intensity."""
    px = img.pixels.copy()
    for c in coords:
        px[c.row, c.col] = 1.0
    return Image(px)


def mark_seed(img: Image, seed: PixelCoord, arm: int = 3) -> Image:
    """Copy of the image with a small full-intensity cross at the seed."""
    px = img.pixels.copy()
    for d in range(-arm, arm + 1):
        r, c = seed.row + d, seed.col
        if 0 <= r < img.height:
            px[r, c] = 1.0
        r, c = seed.row, seed.col + d
        if 0 <= c < img.width:
            px[r, c] = 1.0
    return Image(px)


def draw_bbox(img: Image, bbox: tuple[int, int, int, int]) -> Image:
    """Copy of the image with the bounding-box border at full intensity."""
    min_col, min_row, max_col, max_row = bbox
    px = img.pixels.copy()
    px[min_row, min_col : max_col + 1] = 1.0
    px[max_row, min_col : max_col + 1] = 1.0
    px[min_row : max_row + 1, min_col] = 1.0
    px[min_row : max_row + 1, max_col] = 1.0
    return Image(px)


def heatmap_to_image(heatmap: np.ndarray) -> Image:
    """Normalize a heatmap to [0, 1] for PGM export (flat maps become zeros)."""
    h = np.asarray(heatmap, dtype=np.float64)
    span = h.max() - h.min()
    if span <= 0:
        return Image(np.zeros_like(h))
    return Image((h - h.min()) / span)


def save_loss_curves(report: dict, path) -> None:
    """Plot the three training loss histories to a PNG."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    for ax, key, title in zip(
        axes,
        ("layer1_loss", "layer2_loss", "head_loss"),
        ("layer 1 reconstruction", "layer 2 reconstruction", "softmax head"),
    ):
        ax.plot(report[key])
        ax.set_title(title)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_hit_rate_chart(reports, path) -> None:
    """Bar chart of per-method localisation hit rates to a PNG."""
    methods = [r.method for r in reports]
    rates = [0.0 if r.hit_rate is None else r.hit_rate for r in reports]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(methods, rates, color="steelblue")
    ax.set_ylim(0, 1)
    ax.set_ylabel("seed-in-mask hit rate")
    for i, rate in enumerate(rates):
        ax.text(i, rate + 0.02, f"{rate:.2f}", ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_overlays(img: Image, salient, seed, bbox, out_dir, stem: str) -> list[str]:
    """Write the three standard overlay PGMs; returns the file paths."""
    from .image import write_pgm

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, overlay in (
        ("salient", mark_pixels(img, salient)),
        ("seed", mark_seed(img, seed)),
        ("bbox", draw_bbox(img, bbox)),
    ):
        path = out_dir / f"{stem}_{name}.pgm"
        path.write_bytes(write_pgm(overlay))
        written.append(str(path))
    return written

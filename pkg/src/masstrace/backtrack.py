"""Greedy backtracking from the predicted class neuron down to input pixels.

Starting at the chosen output neuron, each stage picks the single neuron in
the layer below whose weighted activation contributes most, ending with the
top-S input pixels ranked by their contribution w_rj * x_j to the selected
layer-1 neuron. All ties break to the lowest index and sorting is stable, so
the whole chain is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Image, PixelCoord, flatten
from .network import ActivationTrace, NetworkParams, forward


@dataclass(frozen=True)
class BacktrackResult:
    class_used: int
    q_star: int
    r_star: int
    salient_pixels: tuple  # ((PixelCoord, score), ...) sorted by descending score
    trace: ActivationTrace


def backtrack_output(c: int, trace: ActivationTrace, params: NetworkParams) -> int:
    """Layer-2 neuron maximizing W3[c, q] * h2_q; ties to lowest index."""
    if not 0 <= c < params.dims[3]:
        raise ValueError(f"class index {c} out of range [0, {params.dims[3]})")
    return int(np.argmax(params.w3[c] * trace.h2))


def backtrack_hidden2(q: int, trace: ActivationTrace, params: NetworkParams) -> int:
    """Layer-1 neuron maximizing W2[q, r] * h1_r; ties to lowest index."""
    if not 0 <= q < params.dims[2]:
        raise ValueError(f"neuron index {q} out of range [0, {params.dims[2]})")
    return int(np.argmax(params.w2[q] * trace.h1))


def salient_pixels(
    r: int,
    x: np.ndarray,
    params: NetworkParams,
    s: int,
    image_dims: tuple[int, int],
) -> list[tuple[PixelCoord, float]]:
    """Top-S input pixels by contribution w_rj * x_j to layer-1 neuron r.

    image_dims is (height, width); coordinates are recovered by row-major
    unflattening of the pixel index. Stable sort: equal scores keep the
    lower index first.
    """
    height, width = image_dims
    n_pixels = width * height
    if not 1 <= s <= n_pixels:
        raise ValueError(f"salient pixel count {s} must lie in [1, {n_pixels}]")
    if not 0 <= r < params.dims[1]:
        raise ValueError(f"neuron index {r} out of range [0, {params.dims[1]})")
    scores = params.w1[r] * np.asarray(x, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")[:s]
    return [
        (PixelCoord(col=int(j % width), row=int(j // width)), float(scores[j]))
        for j in order
    ]


def run_backtrack(
    img: Image,
    params: NetworkParams,
    s: int,
    force_class: int | None = None,
) -> BacktrackResult:
    """Full chain: classify, then backtrack output -> layer 2 -> layer 1 ->
    top-S salient pixels. Uses the predicted class unless force_class is set.
    """
    j = params.dims[0]
    if img.width * img.height != j:
        raise ValueError(
            f"image {img.width}x{img.height} does not match network input J={j}"
        )
    trace = forward(flatten(img), params)
    c = trace.predicted if force_class is None else int(force_class)
    q_star = backtrack_output(c, trace, params)
    r_star = backtrack_hidden2(q_star, trace, params)
    pixels = salient_pixels(r_star, trace.x, params, s, (img.height, img.width))
    return BacktrackResult(
        class_used=c,
        q_star=q_star,
        r_star=r_star,
        salient_pixels=tuple(pixels),
        trace=trace,
    )

"""Bias-free stacked auto-encoder forward pass and softmax classification.

The network has one input layer (J units), two sigmoid hidden layers (R and Q
units), and a linear output layer (C units) fed to a softmax. There are no
bias terms anywhere, so every activation is a direct function of the input
pixels through the weight matrices alone.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import Image, flatten

_HEADER = struct.Struct("<4I")


@dataclass(frozen=True)
class NetworkParams:
    """Weight matrices W1 (R x J), W2 (Q x R), W3 (C x Q); no biases."""

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray

    def __post_init__(self):
        w1 = np.asarray(self.w1, dtype=np.float64)
        w2 = np.asarray(self.w2, dtype=np.float64)
        w3 = np.asarray(self.w3, dtype=np.float64)
        if w1.ndim != 2 or w2.ndim != 2 or w3.ndim != 2:
            raise ValueError("weight matrices must be 2-D")
        r, j = w1.shape
        q, r2 = w2.shape
        c, q2 = w3.shape
        if r2 != r or q2 != q:
            raise ValueError(
                f"inconsistent layer dims: W1 {w1.shape}, W2 {w2.shape}, W3 {w3.shape}"
            )
        if not (j > r > q > c):
            raise ValueError(f"layer sizes must satisfy J > R > Q > C, got {(j, r, q, c)}")
        for name, w in (("w1", w1), ("w2", w2), ("w3", w3)):
            if not np.all(np.isfinite(w)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "w3", w3)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """(J, R, Q, C)."""
        return (self.w1.shape[1], self.w1.shape[0], self.w2.shape[0], self.w3.shape[0])


@dataclass(frozen=True)
class ActivationTrace:
    """All intermediate activations of one forward pass."""

    x: np.ndarray   # input, length J
    h1: np.ndarray  # hidden layer 1, length R
    h2: np.ndarray  # hidden layer 2, length Q
    z: np.ndarray   # linear output, length C
    p: np.ndarray   # softmax probabilities, length C
    predicted: int  # argmax of p, ties to lowest index


def sigmoid(a):
    """Logistic function exp(a) / (exp(a) + 1), overflow-safe."""
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out if out.ndim else float(out)


def softmax(z: np.ndarray) -> np.ndarray:
    """Shift-invariant softmax along the last axis."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def forward(x: np.ndarray, params: NetworkParams) -> ActivationTrace:
    """Run one input vector through the stack and record every activation.

    h1 = sigmoid(W1 x), h2 = sigmoid(W2 h1), z = W3 h2 (linear, no activation),
    p = softmax(z). The predicted class is the lowest-index argmax of p.
    """
    x = np.asarray(x, dtype=np.float64)
    j = params.dims[0]
    if x.shape != (j,):
        raise ValueError(f"input length {x.shape} does not match J={j}")
    h1 = sigmoid(params.w1 @ x)
    h2 = sigmoid(params.w2 @ h1)
    z = params.w3 @ h2
    p = softmax(z)
    return ActivationTrace(x=x, h1=h1, h2=h2, z=z, p=p, predicted=int(np.argmax(p)))


def forward_batch(xs: np.ndarray, params: NetworkParams):
    """Vectorized forward pass over rows of xs; returns (h1, h2, z, p, preds)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != params.dims[0]:
        raise ValueError(f"expected (n, {params.dims[0]}) inputs, got {xs.shape}")
    h1 = sigmoid(xs @ params.w1.T)
    h2 = sigmoid(h1 @ params.w2.T)
    z = h2 @ params.w3.T
    p = softmax(z)
    return h1, h2, z, p, np.argmax(p, axis=1)


def classify(img: Image, params: NetworkParams) -> tuple[int, float]:
    """Classify an image; returns (predicted class, its probability)."""
    j = params.dims[0]
    if img.width * img.height != j:
        raise ValueError(
            f"image {img.width}x{img.height} does not match network input J={j}"
        )
    trace = forward(flatten(img), params)
    return trace.predicted, float(trace.p[trace.predicted])


def save_model(path, params: NetworkParams, metadata: dict | None = None) -> None:
    """Write the flat binary model file plus a JSON metadata sidecar.

    Layout: 4 little-endian uint32 (J, R, Q, C), then W1, W2, W3 row-major
    little-endian float64. The sidecar lives at <path>.json.
    """
    path = Path(path)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(*params.dims))
        for w in (params.w1, params.w2, params.w3):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
    sidecar = {"dims": list(params.dims)}
    if metadata:
        sidecar.update(metadata)
    with open(path.with_name(path.name + ".json"), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(path) -> tuple[NetworkParams, dict | None]:
    """Read a model file written by save_model; metadata is None if absent."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ValueError(f"model file {path} too short for header")
    j, r, q, c = _HEADER.unpack_from(blob)
    need = _HEADER.size + 8 * (r * j + q * r + c * q)
    if len(blob) < need:
        raise ValueError(f"model file {path} truncated: need {need} bytes")
    flat = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    w1 = flat[: r * j].reshape(r, j)
    w2 = flat[r * j : r * j + q * r].reshape(q, r)
    w3 = flat[r * j + q * r : r * j + q * r + c * q].reshape(c, q)
    params = NetworkParams(w1.copy(), w2.copy(), w3.copy())
    sidecar = path.with_name(path.name + ".json")
    metadata = json.loads(sidecar.read_text()) if sidecar.exists() else None
    return params, metadata

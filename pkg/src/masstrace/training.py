"""Layer-wise training: unsupervised auto-encoder pretraining per hidden layer,
then supervised softmax-head training on the frozen codes.

Everything is bias-free mini-batch SGD. Each stage records its per-epoch loss
history, and the whole pipeline is deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image import Image, flatten
from .network import NetworkParams, sigmoid, softmax


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 30.0
    epochs_per_layer: int = 200
    batch_size: int = 10
    weight_init_scale: float = 0.05
    rng_seed: int = 7
    l2_penalty: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs_per_layer < 1:
            raise ValueError("epochs_per_layer must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weight_init_scale < 0:
            raise ValueError("weight_init_scale must be >= 0")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")


@dataclass
class LayerPretrainState:
    encoder: np.ndarray  # (hidden, d_in)
    decoder: np.ndarray  # (d_in, hidden)
    reconstruction_loss_history: list[float] = field(default_factory=list)


@dataclass
class HeadTrainState:
    weights: np.ndarray  # (n_classes, d_in)
    loss_history: list[float] = field(default_factory=list)


def init_weights(rows: int, cols: int, scale: float, rng_seed) -> np.ndarray:
    """Uniform weights in [-scale, +scale], deterministic given the seed."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return rng.uniform(-scale, scale, size=(rows, cols))


def reconstruction_loss_and_grads(encoder, decoder, batch, l2_penalty=0.0):
    """Mean-per-sample squared reconstruction error and its weight gradients.

    loss = (1/2B) sum_b ||x_b - sigmoid(Wd sigmoid(We x_b))||^2
           + (l2/2) (||We||^2 + ||Wd||^2)
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    b = batch.shape[0]
    h = sigmoid(batch @ encoder.T)
    recon = sigmoid(h @ decoder.T)
    err = recon - batch
    loss = 0.5 * float(np.sum(err * err)) / b
    d2 = err * recon * (1.0 - recon) / b
    g_dec = d2.T @ h
    d1 = (d2 @ decoder) * h * (1.0 - h)
    g_enc = d1.T @ batch
    if l2_penalty:
        loss += 0.5 * l2_penalty * (float(np.sum(encoder**2)) + float(np.sum(decoder**2)))
        g_enc = g_enc + l2_penalty * encoder
        g_dec = g_dec + l2_penalty * decoder
    return loss, g_enc, g_dec


def head_loss_and_grad(weights, codes, labels, l2_penalty=0.0):
    """Mean cross-entropy -log P_label of softmax(W h) and its W-gradient."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.float64))
    labels = np.asarray(labels, dtype=int)
    b = codes.shape[0]
    p = softmax(codes @ weights.T)
    loss = -float(np.mean(np.log(p[np.arange(b), labels])))
    d = p.copy()
    d[np.arange(b), labels] -= 1.0
    grad = (d / b).T @ codes
    if l2_penalty:
        loss += 0.5 * l2_penalty * float(np.sum(weights**2))
        grad = grad + l2_penalty * weights
    return loss, grad


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def pretrain_layer(
    inputs: np.ndarray,
    hidden: int,
    cfg: TrainConfig,
    rng_seed=None,
) -> LayerPretrainState:
    """Train one bias-free auto-encoder layer by mini-batch SGD on MSE.

    The decoder weight matrix is untied from the encoder and discarded by
    callers after pretraining.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] == 0:
        raise ValueError("pretrain_layer needs a non-empty input set")
    d_in = inputs.shape[1]
    if not 1 <= hidden < d_in:
        raise ValueError(f"hidden size {hidden} must lie in [1, {d_in})")
    rng = np.random.default_rng(cfg.rng_seed if rng_seed is None else rng_seed)
    encoder = init_weights(hidden, d_in, cfg.weight_init_scale, rng)
    decoder = init_weights(d_in, hidden, cfg.weight_init_scale, rng)

    # Per-matrix steps are scaled by fan-in. Without this, the encoder of a
    # wide bias-free layer saturates during the initial transient (the input
    # norm amplifies every weight step by ~d_in) and learning stalls.
    enc_rate = cfg.learning_rate / d_in
    dec_rate = cfg.learning_rate / hidden
    history = []
    for _ in range(cfg.epochs_per_layer):
        epoch_losses = []
        for idx in _epoch_batches(inputs.shape[0], cfg.batch_size, rng):
            loss, g_enc, g_dec = reconstruction_loss_and_grads(
                encoder, decoder, inputs[idx], cfg.l2_penalty
            )
            epoch_losses.append(loss)
            encoder -= enc_rate * g_enc
            decoder -= dec_rate * g_dec
        history.append(float(np.mean(epoch_losses)))
    return LayerPretrainState(encoder, decoder, history)


def train_head(
    codes: np.ndarray,
    labels,
    cfg: TrainConfig,
    n_classes: int | None = None,
    rng_seed=None,
) -> HeadTrainState:
    """Train the softmax output layer on frozen layer-2 codes."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.float64))
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (codes.shape[0],):
        raise ValueError("need exactly one label per code vector")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    rng = np.random.default_rng(cfg.rng_seed if rng_seed is None else rng_seed)
    weights = init_weights(n_classes, codes.shape[1], cfg.weight_init_scale, rng)

    rate = cfg.learning_rate / codes.shape[1]  # fan-in scaled, as in pretraining
    history = []
    for _ in range(cfg.epochs_per_layer):
        epoch_losses = []
        for idx in _epoch_batches(codes.shape[0], cfg.batch_size, rng):
            loss, grad = head_loss_and_grad(weights, codes[idx], labels[idx], cfg.l2_penalty)
            epoch_losses.append(loss)
            weights -= rate * grad
        history.append(float(np.mean(epoch_losses)))
    return HeadTrainState(weights, history)


def train_stacked(
    images: list[Image],
    labels,
    dims: tuple[int, int, int, int],
    cfg: TrainConfig,
) -> tuple[NetworkParams, dict]:
    """Full pipeline: pretrain layer 1 on pixels, layer 2 on frozen h1 codes,
    then fit the softmax head on frozen h2 codes. Decoders are discarded.

    Returns the stacked parameters and a training report with the three loss
    histories. Deterministic given cfg.rng_seed.
    """
    j, r, q, c = dims
    if not (j > r > q > c >= 1):
        raise ValueError(f"dims must satisfy J > R > Q > C >= 1, got {dims}")
    labels = np.asarray(labels, dtype=int)
    if len(images) != len(labels) or len(images) == 0:
        raise ValueError("need one label per image and at least one image")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")
    if len(np.unique(labels)) < c:
        raise ValueError("need at least one image per class")
    xs = np.stack([flatten(img) for img in images])
    if xs.shape[1] != j:
        raise ValueError(f"images flatten to length {xs.shape[1]}, expected J={j}")

    seed1, seed2, seed3 = np.random.SeedSequence(cfg.rng_seed).spawn(3)
    layer1 = pretrain_layer(xs, r, cfg, rng_seed=seed1)
    h1 = sigmoid(xs @ layer1.encoder.T)
    layer2 = pretrain_layer(h1, q, cfg, rng_seed=seed2)
    h2 = sigmoid(h1 @ layer2.encoder.T)
    head = train_head(h2, labels, cfg, n_classes=c, rng_seed=seed3)

    params = NetworkParams(layer1.encoder, layer2.encoder, head.weights)
    report = {
        "dims": list(dims),
        "config": {
            "learning_rate": cfg.learning_rate,
            "epochs_per_layer": cfg.epochs_per_layer,
            "batch_size": cfg.batch_size,
            "weight_init_scale": cfg.weight_init_scale,
            "rng_seed": cfg.rng_seed,
            "l2_penalty": cfg.l2_penalty,
        },
        "layer1_loss": layer1.reconstruction_loss_history,
        "layer2_loss": layer2.reconstruction_loss_history,
        "head_loss": head.loss_history,
    }
    return params, report

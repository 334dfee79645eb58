"""Deterministic synthetic two-class dataset: smooth-background "normal"
images versus the same backgrounds with one additive bright mass.

Backgrounds are a base level plus three broad Gaussian gradients with random
centres plus white noise. Abnormal images add one radially decaying bright
blob (truncated Gaussian profile) whose half-peak support is the ground-truth
mask. Every image is a pure function of (rng_seed, class, index).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image import BinaryMask, Image, write_mask_pgm, write_pgm

# Background design: gradients have a fixed amplitude and width, and their
# centres are drawn inset from the border so almost all of each gradient's
# mass stays inside the frame. That keeps the total background intensity
# nearly constant across images, so the mass blob dominates the between-class
# intensity statistics and the two classes stay cleanly separable.
_BASE_LEVEL = 0.30
_GRADIENT_AMP = 0.05
_GRADIENT_SIGMA = 28.0
_N_GRADIENTS = 3


@dataclass(frozen=True)
class SynthConfig:
    width: int = 128
    height: int = 256
    n_normal: int = 100
    n_abnormal: int = 100
    mass_radius_range: tuple[float, float] = (8.0, 20.0)
    mass_contrast_range: tuple[float, float] = (0.25, 0.5)
    background_noise_sigma: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        lo, hi = self.mass_radius_range
        if not 0 < lo <= hi or hi >= min(self.width, self.height) / 2:
            raise ValueError("mass radii must be positive and < min(width, height)/2")
        clo, chi = self.mass_contrast_range
        if not 0 < clo <= chi <= 1:
            raise ValueError("mass contrasts must lie in (0, 1]")
        if self.background_noise_sigma < 0:
            raise ValueError("background_noise_sigma must be >= 0")


@dataclass
class ManifestEntry:
    image_path: str
    label: int  # 0 = normal, 1 = abnormal
    mask_path: str | None
    split: str  # "train" or "test"
    params: dict = field(default_factory=dict)


@dataclass
class DatasetManifest:
    config: SynthConfig
    entries: list[ManifestEntry]

    def to_json(self) -> str:
        doc = {
            "config": {
                "width": self.config.width,
                "height": self.config.height,
                "n_normal": self.config.n_normal,
                "n_abnormal": self.config.n_abnormal,
                "mass_radius_range": list(self.config.mass_radius_range),
                "mass_contrast_range": list(self.config.mass_contrast_range),
                "background_noise_sigma": self.config.background_noise_sigma,
                "rng_seed": self.config.rng_seed,
            },
            "entries": [
                {
                    "image": e.image_path,
                    "label": e.label,
                    "mask": e.mask_path,
                    "split": e.split,
                    "params": e.params,
                }
                for e in self.entries
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        doc = json.loads(text)
        cfgd = doc["config"]
        cfg = SynthConfig(
            width=cfgd["width"],
            height=cfgd["height"],
            n_normal=cfgd["n_normal"],
            n_abnormal=cfgd["n_abnormal"],
            mass_radius_range=tuple(cfgd["mass_radius_range"]),
            mass_contrast_range=tuple(cfgd["mass_contrast_range"]),
            background_noise_sigma=cfgd["background_noise_sigma"],
            rng_seed=cfgd["rng_seed"],
        )
        entries = [
            ManifestEntry(
                image_path=e["image"],
                label=e["label"],
                mask_path=e["mask"],
                split=e["split"],
                params=e.get("params", {}),
            )
            for e in doc["entries"]
        ]
        return DatasetManifest(cfg, entries)


def _rng_for(cfg: SynthConfig, label: int, index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.rng_seed, label, index])


def _background(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    ys, xs = np.mgrid[0 : cfg.height, 0 : cfg.width].astype(np.float64)
    bg = np.full((cfg.height, cfg.width), _BASE_LEVEL)
    sig = _GRADIENT_SIGMA
    for _ in range(_N_GRADIENTS):
        # Gradient centres hug the long edges, outside the central band where
        # masses are placed, so background variation stays decorrelated from
        # the mass signal.
        cx = rng.uniform(0, cfg.width / 8)
        if rng.uniform() < 0.5:
            cx = cfg.width - 1 - cx
        cy = rng.uniform(0, cfg.height - 1)
        bg += _GRADIENT_AMP * np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sig * sig))
    return bg


def _add_noise(img: np.ndarray, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.background_noise_sigma > 0:
        img = img + rng.normal(0.0, cfg.background_noise_sigma, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def gen_normal(cfg: SynthConfig, index: int) -> Image:
    """Mass-free image: smooth background plus noise, deterministic per index."""
    rng = _rng_for(cfg, 0, index)
    return Image(_add_noise(_background(cfg, rng), cfg, rng))


_HALF_PEAK_FACTOR = math.sqrt(2.0 * math.log(2.0))


def _blob(cfg: SynthConfig, rng: np.random.Generator):
    radius = rng.uniform(*cfg.mass_radius_range)
    contrast = rng.uniform(*cfg.mass_contrast_range)
    # The radius is the half-peak radius, so the ground-truth mask is a disc
    # of exactly that radius; the profile is truncated at two sigma where it
    # has decayed to ~13% of peak.
    sigma = radius / _HALF_PEAK_FACTOR
    cutoff = 2.0 * sigma
    # Centres are concentrated in the middle half of each dimension (masses
    # sit in the interior tissue, away from the border), which keeps the
    # abnormal-class variation low-dimensional enough to learn from a small
    # training set. The containment margin keeps the whole truncated profile
    # inside the frame.
    margin = int(math.ceil(cutoff)) + 1

    def _span(extent: int) -> tuple[float, float]:
        lo = max(float(margin), 3 * extent / 8)
        hi = min(float(extent - 1 - margin), 5 * extent / 8)
        if hi < lo:  # image too small for the containment margin: centre it
            lo = hi = (extent - 1) / 2
        return lo, hi

    cx = rng.uniform(*_span(cfg.width))
    cy = rng.uniform(*_span(cfg.height))
    ys, xs = np.mgrid[0 : cfg.height, 0 : cfg.width].astype(np.float64)
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    profile = contrast * np.exp(-d2 / (2 * sigma * sigma))
    profile[d2 > cutoff * cutoff] = 0.0
    mask = profile > contrast / 2.0
    params = {"radius": radius, "contrast": contrast, "cx": cx, "cy": cy}
    return profile, mask, params


def gen_abnormal(cfg: SynthConfig, index: int) -> tuple[Image, BinaryMask]:
    """Background plus one bright blob; mask is the blob's half-peak support."""
    img, mask, _ = gen_abnormal_with_params(cfg, index)
    return img, mask


def gen_abnormal_with_params(cfg: SynthConfig, index: int):
    rng = _rng_for(cfg, 1, index)
    bg = _background(cfg, rng)
    profile, mask, params = _blob(cfg, rng)
    img = Image(_add_noise(bg + profile, cfg, rng))
    return img, BinaryMask(mask), params


def _split_labels(n: int, rng: np.random.Generator) -> list[str]:
    n_train = int(math.floor(0.7 * n))
    order = rng.permutation(n)
    split = ["test"] * n
    for i in order[:n_train]:
        split[int(i)] = "train"
    return split


def build_dataset(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Generate all images and masks under out_dir and write manifest.json.

    The train/test split is 70/30 stratified per class using a deterministic
    shuffle derived from the config seed. Rebuilding with the same config
    produces byte-identical files.
    """
    if cfg.n_normal < 1 or cfg.n_abnormal < 1:
        raise ValueError("need at least one image per class")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)

    split_rng = np.random.default_rng([cfg.rng_seed, 2])
    normal_split = _split_labels(cfg.n_normal, split_rng)
    abnormal_split = _split_labels(cfg.n_abnormal, split_rng)

    entries = []
    for i in range(cfg.n_normal):
        rel = f"images/normal_{i:04d}.pgm"
        (out_dir / rel).write_bytes(write_pgm(gen_normal(cfg, i)))
        entries.append(ManifestEntry(rel, 0, None, normal_split[i]))
    for i in range(cfg.n_abnormal):
        img, mask, params = gen_abnormal_with_params(cfg, i)
        rel = f"images/abnormal_{i:04d}.pgm"
        mrel = f"masks/abnormal_{i:04d}_mask.pgm"
        (out_dir / rel).write_bytes(write_pgm(img))
        (out_dir / mrel).write_bytes(write_mask_pgm(mask))
        entries.append(ManifestEntry(rel, 1, mrel, abnormal_split[i], params))

    manifest = DatasetManifest(cfg, entries)
    (out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest

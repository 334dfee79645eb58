"""Command-line entry point: generate | train | localise | evaluate.

All behaviour is driven by a single JSON config file with per-module sections
(synth, train, cluster, regiongrow, occlusion, eval); every field has a
default matching the standard experiment (256x128 images, R=100, Q=10, C=2,
S=20). Unknown sections or keys are rejected before any file is written.

Exit codes: 0 success, 1 config/validation error, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .evalharness import EvalConfig, evaluate, render_table, report_to_json
from .image import read_pgm
from .network import load_model, save_model
from .occlusion import OcclusionConfig
from .render import save_hit_rate_chart, save_loss_curves, save_overlays
from .seedcluster import ClusterConfig
from .segmentation import RegionGrowConfig, region_grow
from .synthdata import DatasetManifest, SynthConfig, build_dataset
from .training import TrainConfig, train_stacked

N_CLASSES = 2


class ConfigError(ValueError):
    pass


_SECTION_DEFAULTS = {
    "synth": {
        "width": 128,
        "height": 256,
        "n_normal": 100,
        "n_abnormal": 100,
        "mass_radius_range": [8.0, 20.0],
        "mass_contrast_range": [0.25, 0.5],
        "background_noise_sigma": 0.05,
        "rng_seed": 20240501,
    },
    "train": {
        "r_units": 100,
        "q_units": 10,
        "learning_rate": 30.0,
        "epochs_per_layer": 200,
        "batch_size": 10,
        "weight_init_scale": 0.05,
        "l2_penalty": 0.0,
        "rng_seed": 7,
    },
    "cluster": {"link_radius": 10.0, "min_cluster_size": 3},
    "regiongrow": {"intensity_tolerance": 0.1, "connectivity": 8, "max_region_fraction": 0.5},
    "occlusion": {"patch_size": 16, "stride": 8, "fill_value": 0.0},
    "eval": {"salient_count": 20, "bbox_iou_threshold": 0.25},
}


class RunConfig:
    """Validated view of the JSON config with per-module config objects."""

    def __init__(self, doc: dict | None = None):
        doc = doc or {}
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(doc) - set(_SECTION_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        merged = {}
        for section, defaults in _SECTION_DEFAULTS.items():
            given = doc.get(section, {})
            if not isinstance(given, dict):
                raise ConfigError(f"section {section!r} must be an object")
            bad = set(given) - set(defaults)
            if bad:
                raise ConfigError(f"unknown keys in section {section!r}: {sorted(bad)}")
            merged[section] = {**defaults, **given}
        self.raw = merged
        try:
            s = merged["synth"]
            self.synth = SynthConfig(
                width=s["width"],
                height=s["height"],
                n_normal=s["n_normal"],
                n_abnormal=s["n_abnormal"],
                mass_radius_range=tuple(s["mass_radius_range"]),
                mass_contrast_range=tuple(s["mass_contrast_range"]),
                background_noise_sigma=s["background_noise_sigma"],
                rng_seed=s["rng_seed"],
            )
            t = merged["train"]
            self.r_units = int(t["r_units"])
            self.q_units = int(t["q_units"])
            self.train = TrainConfig(
                learning_rate=t["learning_rate"],
                epochs_per_layer=t["epochs_per_layer"],
                batch_size=t["batch_size"],
                weight_init_scale=t["weight_init_scale"],
                rng_seed=t["rng_seed"],
                l2_penalty=t["l2_penalty"],
            )
            self.cluster = ClusterConfig(**merged["cluster"])
            self.regiongrow = RegionGrowConfig(**merged["regiongrow"])
            self.occlusion = OcclusionConfig(**merged["occlusion"])
            self.eval = EvalConfig(**merged["eval"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.r_units < 1 or self.q_units < 1:
            raise ConfigError("r_units and q_units must be >= 1")

    @staticmethod
    def load(path: str | None) -> "RunConfig":
        if path is None:
            return RunConfig()
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        return RunConfig(doc)


def _load_manifest(path: str) -> tuple[DatasetManifest, Path]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"manifest not found: {p}")
    return DatasetManifest.from_json(p.read_text()), p.parent


def cmd_generate(args) -> int:
    cfg = RunConfig.load(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    build_dataset(cfg.synth, out)
    print(out / "manifest.json")
    return 0


def cmd_train(args) -> int:
    cfg = RunConfig.load(args.config)
    manifest, base = _load_manifest(args.manifest)
    j = manifest.config.width * manifest.config.height
    dims = (j, cfg.r_units, cfg.q_units, N_CLASSES)
    if not (dims[0] > dims[1] > dims[2] > dims[3]):
        raise ConfigError(f"layer sizes must satisfy J > R > Q > C, got {dims}")

    train_entries = [e for e in manifest.entries if e.split == "train"]
    images = [read_pgm((base / e.image_path).read_bytes()) for e in train_entries]
    labels = [e.label for e in train_entries]
    params, report = train_stacked(images, labels, dims, cfg.train)
    report["train_images"] = [e.image_path for e in train_entries]

    model_path = Path(args.model_out)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model_path, params, metadata={"config": cfg.raw["train"]})
    report_path = model_path.with_name(model_path.name + ".train.json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    save_loss_curves(report, model_path.with_name(model_path.name + ".losses.png"))
    print(model_path)
    return 0


def cmd_localise(args) -> int:
    cfg = RunConfig.load(args.config)
    params, _ = load_model(args.model)
    img = read_pgm(Path(args.image).read_bytes())

    from .evalharness import localise_backtrack

    seed, result = localise_backtrack(
        img,
        params,
        cfg.eval.salient_count,
        cfg.cluster,
        force_class=args.force_class,
    )
    roi = region_grow(img, seed, cfg.regiongrow)
    out = {
        "class": result.trace.predicted,
        "class_used": result.class_used,
        "P": [float(p) for p in result.trace.p],
        "seed": [seed.col, seed.row],
        "bbox": list(roi.bbox),
        "roi_truncated": roi.truncated,
    }
    if args.emit_overlays:
        stem = Path(args.image).stem
        out["overlays"] = save_overlays(
            img,
            [c for c, _ in result.salient_pixels],
            seed,
            roi.bbox,
            args.out_dir,
            stem,
        )
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    cfg = RunConfig.load(args.config)
    if not Path(args.model).exists():
        raise FileNotFoundError(f"model not found: {args.model}")
    params, _ = load_model(args.model)
    manifest, base = _load_manifest(args.manifest)

    reports = [
        evaluate(
            manifest,
            base,
            params,
            method,
            eval_cfg=cfg.eval,
            cluster_cfg=cfg.cluster,
            grow_cfg=cfg.regiongrow,
            occl_cfg=cfg.occlusion,
            jobs=args.jobs,
        )
        for method in args.methods
    ]
    md, csv = render_table(reports)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report_to_json(reports))
    (out_dir / "report.csv").write_text(csv)
    (out_dir / "report.md").write_text(md)
    save_hit_rate_chart(reports, out_dir / "hit_rates.png")
    print(md, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="masstrace",
        description="Mass localisation by greedy activation backtracking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build the synthetic dataset")
    p.add_argument("--config", default=None, help="JSON config path")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the stacked network on a manifest")
    p.add_argument("--config", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("localise", help="localise one image with a trained model")
    p.add_argument("--config", default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--force-class", type=int, default=None)
    p.add_argument("--emit-overlays", action="store_true")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_localise)

    p = sub.add_parser("evaluate", help="batch evaluation over a manifest")
    p.add_argument("--config", default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--methods", nargs="+", default=["backtrack"], choices=["backtrack", "occlusion"])
    p.add_argument("--out-dir", default=".")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

import json
from pathlib import Path

import pytest

from masstrace.cli import ConfigError, RunConfig, main

TINY_CONFIG = {
    "synth": {
        "width": 24,
        "height": 32,
        "n_normal": 8,
        "n_abnormal": 8,
        "mass_radius_range": [4.0, 7.0],
        "rng_seed": 31,
    },
    "train": {
        "r_units": 12,
        "q_units": 5,
        "epochs_per_layer": 15,
        "batch_size": 4,
        "rng_seed": 32,
    },
    "cluster": {"link_radius": 6.0, "min_cluster_size": 2},
    "occlusion": {"patch_size": 8, "stride": 4},
    "eval": {"salient_count": 10},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    cfg_path = ws / "config.json"
    cfg_path.write_text(json.dumps(TINY_CONFIG))
    data_dir = ws / "data"
    assert main(["generate", "--config", str(cfg_path), "--out", str(data_dir)]) == 0
    model = ws / "model.bin"
    assert main([
        "train", "--config", str(cfg_path),
        "--manifest", str(data_dir / "manifest.json"),
        "--model-out", str(model),
    ]) == 0
    return ws, cfg_path, data_dir, model


def test_runconfig_defaults():
    cfg = RunConfig()
    assert cfg.synth.width == 128 and cfg.synth.height == 256
    assert cfg.r_units == 100 and cfg.q_units == 10
    assert cfg.eval.salient_count == 20


def test_runconfig_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig({"synth": {"bogus": 1}})
    with pytest.raises(ConfigError):
        RunConfig({"mystery_section": {}})


def test_runconfig_rejects_invalid_values():
    with pytest.raises(ConfigError):
        RunConfig({"regiongrow": {"connectivity": 5}})


def test_generate_outputs(workspace):
    ws, cfg_path, data_dir, model = workspace
    manifest = json.loads((data_dir / "manifest.json").read_text())
    assert len(manifest["entries"]) == 16
    n_masks = len(list((data_dir / "masks").glob("*.pgm")))
    assert n_masks == 8


def test_generate_rerun_identical(workspace, tmp_path):
    ws, cfg_path, data_dir, model = workspace
    again = tmp_path / "again"
    assert main(["generate", "--config", str(cfg_path), "--out", str(again)]) == 0
    assert (again / "manifest.json").read_bytes() == (data_dir / "manifest.json").read_bytes()


def test_generate_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"synth": {"n_normal": 0, "width": 24, "height": 32,
                                         "mass_radius_range": [4.0, 7.0]}}))
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "d")]) == 1


def test_train_artifacts(workspace):
    ws, cfg_path, data_dir, model = workspace
    assert model.exists()
    report = json.loads(model.with_name(model.name + ".train.json").read_text())
    assert report["layer1_loss"][-1] <= report["layer1_loss"][0]
    assert model.with_name(model.name + ".losses.png").exists()


def test_train_repeat_identical_model(workspace, tmp_path):
    ws, cfg_path, data_dir, model = workspace
    again = tmp_path / "model2.bin"
    assert main([
        "train", "--config", str(cfg_path),
        "--manifest", str(data_dir / "manifest.json"),
        "--model-out", str(again),
    ]) == 0
    assert again.read_bytes() == model.read_bytes()


def test_train_rejects_r_geq_j(workspace, tmp_path):
    ws, cfg_path, data_dir, model = workspace
    cfg = dict(TINY_CONFIG)
    cfg["train"] = {**TINY_CONFIG["train"], "r_units": 24 * 32}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(cfg))
    assert main([
        "train", "--config", str(bad),
        "--manifest", str(data_dir / "manifest.json"),
        "--model-out", str(tmp_path / "m.bin"),
    ]) == 1


def test_localise_json_output(workspace, capsys):
    ws, cfg_path, data_dir, model = workspace
    manifest = json.loads((data_dir / "manifest.json").read_text())
    abnormal = next(e for e in manifest["entries"] if e["label"] == 1)
    rc = main([
        "localise", "--config", str(cfg_path),
        "--model", str(model),
        "--image", str(data_dir / abnormal["image"]),
    ])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    col, row = out["seed"]
    assert 0 <= col < 24 and 0 <= row < 32
    assert len(out["bbox"]) == 4 and len(out["P"]) == 2


def test_localise_force_class(workspace, capsys):
    ws, cfg_path, data_dir, model = workspace
    manifest = json.loads((data_dir / "manifest.json").read_text())
    entry = manifest["entries"][0]
    rc = main([
        "localise", "--config", str(cfg_path),
        "--model", str(model),
        "--image", str(data_dir / entry["image"]),
        "--force-class", "1",
    ])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["class_used"] == 1


def test_localise_overlays(workspace, capsys, tmp_path):
    ws, cfg_path, data_dir, model = workspace
    from masstrace.image import read_pgm

    manifest = json.loads((data_dir / "manifest.json").read_text())
    entry = manifest["entries"][0]
    rc = main([
        "localise", "--config", str(cfg_path),
        "--model", str(model),
        "--image", str(data_dir / entry["image"]),
        "--emit-overlays", "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    overlays = json.loads(capsys.readouterr().out)["overlays"]
    assert len(overlays) == 3
    for path in overlays:
        img = read_pgm(Path(path).read_bytes())
        assert (img.width, img.height) == (24, 32)


def test_evaluate_two_methods(workspace, capsys, tmp_path):
    ws, cfg_path, data_dir, model = workspace
    out_dir = tmp_path / "report"
    rc = main([
        "evaluate", "--config", str(cfg_path),
        "--model", str(model),
        "--manifest", str(data_dir / "manifest.json"),
        "--methods", "backtrack", "occlusion",
        "--out-dir", str(out_dir), "--jobs", "1",
    ])
    assert rc == 0
    table = capsys.readouterr().out
    assert "backtrack" in table and "occlusion" in table
    for name in ("report.json", "report.csv", "report.md", "hit_rates.png"):
        assert (out_dir / name).exists()
    csv = (out_dir / "report.csv").read_text()
    assert len(csv.strip().splitlines()) == 3


def test_evaluate_missing_model(workspace, tmp_path, capsys):
    ws, cfg_path, data_dir, model = workspace
    rc = main([
        "evaluate", "--config", str(cfg_path),
        "--model", str(tmp_path / "nope.bin"),
        "--manifest", str(data_dir / "manifest.json"),
        "--out-dir", str(tmp_path),
    ])
    assert rc == 2
    assert "nope.bin" in capsys.readouterr().err

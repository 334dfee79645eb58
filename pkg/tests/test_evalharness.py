import numpy as np
import pytest

from masstrace.evalharness import (
    EvalConfig,
    EvalReport,
    bbox_iou,
    evaluate,
    is_hit,
    render_table,
)
from masstrace.image import BinaryMask, PixelCoord
from masstrace.network import NetworkParams
from masstrace.synthdata import SynthConfig, build_dataset
from masstrace.training import TrainConfig, train_stacked


def disc_mask(h, w, cy, cx, radius):
    ys, xs = np.mgrid[0:h, 0:w]
    return BinaryMask((ys - cy) ** 2 + (xs - cx) ** 2 <= radius**2)


def test_is_hit_centroid_of_disc():
    mask = disc_mask(30, 30, 15, 12, 5)
    assert is_hit(PixelCoord(col=12, row=15), mask)


def test_is_hit_outside_mask():
    mask = disc_mask(30, 30, 15, 12, 5)
    assert not is_hit(PixelCoord(col=0, row=0), mask)


def test_is_hit_out_of_bounds_rejected():
    mask = disc_mask(10, 10, 5, 5, 2)
    with pytest.raises(ValueError):
        is_hit(PixelCoord(col=10, row=0), mask)


def test_is_hit_matches_membership_oracle():
    rng = np.random.default_rng(100)
    for _ in range(1000):
        cy, cx = rng.integers(0, 20, size=2)
        mask = disc_mask(20, 20, int(cy), int(cx), int(rng.integers(1, 6)))
        seed = PixelCoord(int(rng.integers(0, 20)), int(rng.integers(0, 20)))
        assert is_hit(seed, mask) == bool(mask.bits[seed.row, seed.col])


def test_bbox_iou():
    assert bbox_iou((0, 0, 9, 9), (0, 0, 9, 9)) == 1.0
    assert bbox_iou((0, 0, 4, 4), (10, 10, 14, 14)) == 0.0
    # half overlap: 5x10 over union 150
    assert bbox_iou((0, 0, 9, 9), (5, 0, 14, 9)) == pytest.approx(50 / 150)


def make_report(method, correct, wrong):
    total = correct + wrong
    return EvalReport(
        method=method,
        records=[],
        n_correct=correct,
        n_wrong=wrong,
        hit_rate=correct / total if total else None,
        iou_hit_rate=None,
        classification_accuracy=0.9,
    )


def test_render_table_counts_row():
    md, csv = render_table([make_report("backtrack", 87, 13)])
    assert "backtrack,87,13" in csv
    assert "| backtrack | 87 | 13 |" in md


def test_render_table_zero_counts_undefined():
    md, csv = render_table([make_report("occlusion", 0, 0)])
    assert "occlusion,0,0,undefined" in csv
    assert "undefined" in md


def test_render_table_orders_by_hit_rate():
    md, csv = render_table([make_report("occlusion", 2, 8), make_report("backtrack", 9, 1)])
    lines = csv.strip().splitlines()
    assert lines[1].startswith("backtrack")
    assert lines[2].startswith("occlusion")


def test_render_table_empty_rejected():
    with pytest.raises(ValueError):
        render_table([])


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    """Small end-to-end dataset + trained model shared by evaluate tests."""
    out = tmp_path_factory.mktemp("tiny")
    cfg = SynthConfig(width=24, height=32, n_normal=10, n_abnormal=10,
                      mass_radius_range=(4.0, 7.0), rng_seed=17)
    manifest = build_dataset(cfg, out)
    from masstrace.image import read_pgm

    train = [e for e in manifest.entries if e.split == "train"]
    images = [read_pgm((out / e.image_path).read_bytes()) for e in train]
    labels = [e.label for e in train]
    tcfg = TrainConfig(learning_rate=0.5, epochs_per_layer=40, batch_size=4,
                       weight_init_scale=0.05, rng_seed=3)
    params, _ = train_stacked(images, labels, (24 * 32, 16, 6, 2), tcfg)
    return manifest, out, params


def eval_kwargs():
    from masstrace.occlusion import OcclusionConfig
    from masstrace.seedcluster import ClusterConfig

    return dict(
        eval_cfg=EvalConfig(salient_count=10),
        cluster_cfg=ClusterConfig(link_radius=6, min_cluster_size=2),
        occl_cfg=OcclusionConfig(patch_size=8, stride=4),
    )


def test_evaluate_counts_partition(tiny_run):
    manifest, out, params = tiny_run
    report = evaluate(manifest, out, params, "backtrack", **eval_kwargs())
    n_abnormal_test = sum(1 for e in manifest.entries if e.split == "test" and e.label == 1)
    assert report.n_correct + report.n_wrong == n_abnormal_test
    localised = [r for r in report.records if "hit" in r]
    assert len(localised) == n_abnormal_test
    assert report.hit_rate == report.n_correct / n_abnormal_test


def test_evaluate_deterministic(tiny_run):
    manifest, out, params = tiny_run
    a = evaluate(manifest, out, params, "backtrack", **eval_kwargs())
    b = evaluate(manifest, out, params, "backtrack", **eval_kwargs())
    assert a.to_dict() == b.to_dict()


def test_evaluate_parallel_matches_serial(tiny_run):
    manifest, out, params = tiny_run
    serial = evaluate(manifest, out, params, "backtrack", **eval_kwargs(), jobs=1)
    parallel = evaluate(manifest, out, params, "backtrack", **eval_kwargs(), jobs=3)
    assert serial.to_dict() == parallel.to_dict()


def test_evaluate_occlusion_method(tiny_run):
    manifest, out, params = tiny_run
    report = evaluate(manifest, out, params, "occlusion", **eval_kwargs())
    localised = [r for r in report.records if "hit" in r]
    assert localised and all("seed" in r for r in localised)


def test_evaluate_unknown_method(tiny_run):
    manifest, out, params = tiny_run
    with pytest.raises(ValueError):
        evaluate(manifest, out, params, "gradcam")


def test_evaluate_missing_file_surfaced(tiny_run, tmp_path):
    manifest, out, params = tiny_run
    with pytest.raises(FileNotFoundError, match="missing"):
        evaluate(manifest, tmp_path, params, "backtrack", **eval_kwargs())


def test_constructed_hits_report(tmp_path):
    # hand-built network whose backtrack chain always lands on the brightest
    # pixels; with noise-free max-contrast masses those are inside the mask
    cfg = SynthConfig(width=24, height=32, n_normal=2, n_abnormal=2,
                      mass_radius_range=(5.0, 7.0), mass_contrast_range=(0.5, 0.5),
                      background_noise_sigma=0.0, rng_seed=23)
    manifest = build_dataset(cfg, tmp_path)
    for e in manifest.entries:
        e.split = "test"
    j = 24 * 32
    w1 = np.zeros((4, j))
    w1[0] = 0.01  # uniform positive: salient pixels are the brightest pixels
    w2 = np.zeros((3, 4))
    w2[0, 0] = 1.0
    w3 = np.zeros((2, 3))
    w3[1, 0] = 1.0
    params = NetworkParams(w1, w2, w3)
    report = evaluate(manifest, tmp_path, params, "backtrack", **eval_kwargs())
    assert (report.n_correct, report.n_wrong) == (2, 0)
    assert report.hit_rate == 1.0

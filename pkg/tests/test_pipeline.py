"""End-to-end pipeline tests: identity, recolor, preview, jobs, caching."""

import json

import numpy as np
import pytest

from chromaflow.colorspace import rgb_to_lab
from chromaflow.imageio import write_mask, write_png
from chromaflow.pipeline import (
    STAGES,
    PipelineCache,
    PipelineConfig,
    PipelineError,
    TransferJob,
    load_job,
    preview,
    preview_job,
    run,
    source_digest,
)
from chromaflow.regions import Correspondence, CorrespondenceSet

from conftest import (
    full_mask,
    gradient_rgb,
    identity_job,
    noisy_rgb,
    quadrant_rgb,
    rect_mask,
    two_patch_job,
)


def test_identity_transfer_is_near_exact(quad64):
    job = identity_job(quad64)
    out, report, timings = run(job)
    diff = np.abs(out.pixels.astype(int) - quad64.pixels.astype(int))
    assert diff.max() <= 1
    assert report.converged.all()
    assert set(timings) == set(STAGES)


def test_rerun_is_bit_identical():
    img = gradient_rgb(40, 32, seed=71)
    job = identity_job(img, PipelineConfig(beta=1.0))
    out1, _, _ = run(job)
    out2, _, _ = run(job)
    assert (out1.pixels == out2.pixels).all()


def test_two_patch_recolor_moves_means():
    job, left, right, tgt = two_patch_job(size=64, seed=72)
    keep_set = CorrespondenceSet(job.corr_set.correspondences, (left,))
    job = TransferJob(job.source, job.targets, keep_set, job.config)
    out, report, _ = run(job)
    assert report.converged.all()

    target_mean = tgt.pixels.reshape(-1, 3).mean(axis=0)
    right_mean = out.pixels[right.member].mean(axis=0)
    assert np.abs(right_mean - target_mean).max() <= 2.0

    left_before = job.source.pixels[left.member].mean(axis=0)
    left_after = out.pixels[left.member].mean(axis=0)
    assert np.abs(left_after - left_before).max() < 2.0


def test_preview_noop_when_already_small(quad64):
    job = identity_job(quad64)
    direct, _, _ = run(job)
    via_preview = preview(job, max_dim=64)
    assert (via_preview.pixels == direct.pixels).all()


def test_preview_dimension_contract():
    img = gradient_rgb(512, 512, seed=73)
    job = identity_job(img)
    small = preview_job(job, 64)
    assert (small.source.width, small.source.height) == (64, 64)
    assert small.targets["self"].width == 64
    mask = small.corr_set.correspondences[0].source_region
    assert (mask.width, mask.height) == (64, 64)


def test_preview_identity_survives_downscale():
    # 256 -> 64 is an exact 4x box downscale, so the quadrant colors survive
    # unmixed and the identity property carries through the small solve.
    img = quadrant_rgb(256)
    job = identity_job(img)
    out = preview(job, max_dim=64)
    small = preview_job(job, 64)
    diff = np.abs(out.pixels.astype(int) - small.source.pixels.astype(int))
    assert diff.max() <= 1


def test_preview_rejects_tiny_bound(quad64):
    with pytest.raises(ValueError, match="max_dim"):
        preview(identity_job(quad64), max_dim=16)


def test_preview_scales_each_image_independently():
    src = gradient_rgb(300, 100, seed=75)
    tgt = gradient_rgb(80, 60, seed=76)
    corr = Correspondence(full_mask(100, 300), "t", full_mask(60, 80))
    job = TransferJob(src, {"t": tgt}, CorrespondenceSet((corr,)), PipelineConfig())
    small = preview_job(job, 150)
    assert (small.source.width, small.source.height) == (50, 150)
    assert (small.targets["t"].width, small.targets["t"].height) == (60, 80)


def test_k_clamped_with_warning():
    img = quadrant_rgb(16)  # 4 distinct colors -> few landmarks
    job = identity_job(img, PipelineConfig(k=21, beta=1.0))
    with pytest.warns(UserWarning, match="clamp"):
        out, _, _ = run(job)
    assert out.pixels.shape == (16, 16, 3)


def test_constant_image_pinned_path():
    img = noisy_rgb(12, 12, (90, 90, 90), seed=77, spread=0)
    job = identity_job(img)
    out, report, _ = run(job)
    assert (out.pixels == img.pixels).all()
    assert (report.iterations == 0).all()


def test_grayscale_image_falls_back_to_full_sampling():
    vals = np.linspace(5, 250, 48 * 48).astype(np.uint8).reshape(48, 48)
    px = np.stack([vals, vals, vals], axis=-1)
    from chromaflow.colorspace import RgbImage

    img = RgbImage(px)
    job = identity_job(img, PipelineConfig(beta=0.05))
    out, report, _ = run(job)
    assert report.converged.all()
    diff = np.abs(out.pixels.astype(int) - px.astype(int))
    assert diff.max() <= 1


def test_multi_target_edits_do_not_bleed():
    size = 48
    left = noisy_rgb(size, size // 2, (200, 40, 40), seed=78)
    right = noisy_rgb(size, size // 2, (40, 60, 200), seed=79)
    src_px = np.concatenate([left.pixels, right.pixels], axis=1)
    from chromaflow.colorspace import RgbImage

    src = RgbImage(src_px)
    tgt_a = noisy_rgb(size, size, (60, 180, 80), seed=80)
    tgt_b = noisy_rgb(size, size, (240, 200, 60), seed=81)
    lmask = rect_mask(size, size, 0, 0, size // 2, size)
    rmask = rect_mask(size, size, size // 2, 0, size, size)
    fmask = full_mask(size, size)

    both = TransferJob(
        src,
        {"a": tgt_a, "b": tgt_b},
        CorrespondenceSet(
            (Correspondence(lmask, "a", fmask), Correspondence(rmask, "b", fmask))
        ),
        PipelineConfig(),
    )
    out_both, _, _ = run(both)

    for mask, tid, tgt in ((lmask, "a", tgt_a), (rmask, "b", tgt_b)):
        solo = TransferJob(
            src, {tid: tgt}, CorrespondenceSet((Correspondence(mask, tid, fmask),)),
            PipelineConfig(),
        )
        out_solo, _, _ = run(solo)
        shift_both = out_both.pixels[mask.member].mean(axis=0)
        shift_solo = out_solo.pixels[mask.member].mean(axis=0)
        assert np.abs(shift_both - shift_solo).max() <= 4.0


def test_cache_reuse_is_bit_identical():
    img = gradient_rgb(40, 40, seed=82)
    job = identity_job(img)
    cache = PipelineCache()
    out1, _, t1 = run(job, cache=cache)
    n_entries = len(cache)
    assert n_entries == 2  # landmark set + graph
    out2, _, t2 = run(job, cache=cache)
    assert len(cache) == n_entries
    assert (out1.pixels == out2.pixels).all()


def test_warm_start_shape_mismatch_is_ignored():
    img = gradient_rgb(24, 24, seed=83)
    job = identity_job(img)
    out, report, _ = run(job, warm_start=np.zeros((3, 3)))
    assert report.converged.all()


def test_stage_error_is_tagged():
    img = quadrant_rgb(16)
    mask = full_mask(16, 16)
    # Correspondence names a target id that the job does not carry.
    corr_set = CorrespondenceSet((Correspondence(mask, "ghost", mask),))
    job = TransferJob(img, {}, corr_set, PipelineConfig())
    with pytest.raises(PipelineError) as err:
        run(job)
    assert str(err.value).startswith("constraints:")
    assert err.value.stage == "constraints"


def test_config_validation_and_mapping():
    with pytest.raises(ValueError):
        PipelineConfig(k=0)
    with pytest.raises(ValueError):
        PipelineConfig(beta=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(lam=-1.0)
    with pytest.raises(ValueError):
        PipelineConfig(tol=0.0)

    cfg = PipelineConfig.from_dict({"lambda": 55.0, "k": 9})
    assert cfg.lam == 55.0 and cfg.k == 9
    assert cfg.to_dict()["lambda"] == 55.0
    assert "lam" not in cfg.to_dict()
    with pytest.raises(ValueError, match="unknown config field"):
        PipelineConfig.from_dict({"kk": 3})
    merged = cfg.merged({"beta": 0.4})
    assert merged.beta == 0.4 and merged.lam == 55.0


def test_source_digest_discriminates():
    a = gradient_rgb(16, 16, seed=84)
    b = gradient_rgb(16, 16, seed=85)
    assert source_digest(a) == source_digest(a)
    assert source_digest(a) != source_digest(b)
    tall = gradient_rgb(32, 8, seed=84)
    wide = gradient_rgb(8, 32, seed=84)
    assert source_digest(tall) != source_digest(wide)


def write_job_fixture(tmp_path, img, config=None):
    """Lay out a complete job directory and return its JSON path."""
    write_png(img, tmp_path / "src.png")
    write_png(img, tmp_path / "tgt.png")
    mask = full_mask(img.width, img.height)
    write_mask(mask, tmp_path / "mask.png")
    job = {
        "source": "src.png",
        "targets": {"t": "tgt.png"},
        "correspondences": [
            {"source_mask": "mask.png", "target": "t", "target_mask": "mask.png"}
        ],
    }
    if config is not None:
        job["config"] = config
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    return path


def test_load_job_round_trip(tmp_path, quad64):
    path = write_job_fixture(tmp_path, quad64, config={"lambda": 10.0, "beta": 1.0})
    job = load_job(path)
    assert (job.source.pixels == quad64.pixels).all()
    assert job.config.lam == 10.0
    assert job.config.beta == 1.0
    out, report, _ = run(job)
    assert report.converged.all()
    diff = np.abs(out.pixels.astype(int) - quad64.pixels.astype(int))
    assert diff.max() <= 1


def test_load_job_rejects_unknown_and_missing_fields(tmp_path, quad64):
    path = write_job_fixture(tmp_path, quad64)
    data = json.loads(path.read_text())

    bad = dict(data, extra=1)
    with pytest.raises(ValueError, match="unknown job field"):
        from chromaflow.pipeline import job_from_dict

        job_from_dict(bad, tmp_path)

    from chromaflow.pipeline import job_from_dict

    missing = {k: v for k, v in data.items() if k != "targets"}
    with pytest.raises(ValueError, match="missing job field"):
        job_from_dict(missing, tmp_path)

    bad_corr = json.loads(path.read_text())
    bad_corr["correspondences"][0]["typo"] = "x"
    with pytest.raises(ValueError, match="unknown correspondence field"):
        job_from_dict(bad_corr, tmp_path)

    short_corr = json.loads(path.read_text())
    del short_corr["correspondences"][0]["target"]
    with pytest.raises(ValueError, match="missing 'target'"):
        job_from_dict(short_corr, tmp_path)

import numpy as np
import pytest

import evdvsr


def test_voxelize_matches_hand_computed_bins():
    # one event at 37% of the window splits between bins 1 and 2 of 5
    grid = evdvsr.voxelize([1], [0], [370], [1], 0.0, 1000.0, bins=5, width=2, height=1)
    assert grid.shape == (5, 1, 2)
    assert grid[1, 0, 1] == pytest.approx(0.52, abs=1e-6)
    assert grid[2, 0, 1] == pytest.approx(0.48, abs=1e-6)
    assert grid.sum() == pytest.approx(1.0)


def test_blur_is_the_frame_average():
    rng = np.random.default_rng(0)
    frames = rng.random((5, 3, 6, 7), dtype=np.float32)
    np.testing.assert_allclose(evdvsr.synthesize_blur(frames), frames.mean(axis=0), atol=1e-6)


def test_metrics_against_numpy():
    rng = np.random.default_rng(1)
    a = rng.random((3, 16, 16), dtype=np.float32)
    b = rng.random((3, 16, 16), dtype=np.float32)
    mse = np.mean((a.astype(np.float64) - b) ** 2)
    assert evdvsr.psnr(a, b) == pytest.approx(10 * np.log10(1 / mse), abs=1e-5)
    assert evdvsr.ssim(a, a) == pytest.approx(1.0)
    m = evdvsr.evaluate_clip(np.stack([a, b]), np.stack([a, b]))
    assert m["frames"] == 2
    assert m["tof"] == pytest.approx(0.0)
    assert evdvsr.loss_r(a, b) == pytest.approx(mse, rel=1e-5)


def test_simulated_events_follow_brightness_change():
    frames = np.full((2, 1, 4, 4), 0.2, dtype=np.float32)
    frames[1, 0, 1, 2] = 0.8
    ev = evdvsr.simulate_events(frames, [0, 1000])
    assert len(ev["t"]) > 0
    assert set(zip(ev["x"].tolist(), ev["y"].tolist())) == {(2, 1)}
    assert (ev["p"] == 1).all()


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        evdvsr.voxelize([0], [0], [10], [1], 0.0, 0.0, bins=5, width=1, height=1)


def test_cli_pipeline_and_fresh_model_is_bicubic(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(
        "model.channels = 8\nmodel.residual_blocks = 1\nmodel.attention_heads = 2\nmodel.dcn_groups = 2\n"
        "model.flow_channels = 8\ndata.hr_height = 64\ndata.hr_width = 64\ndata.frames = 3\n"
        "data.sharp_per_exposure_min = 4\ndata.sharp_per_exposure_max = 6\ntrain.clip_length = 3\n"
        "train.crop_size = 8\ntrain.batch_size = 2\ntrain.flow_pretrain_iters = 2\n"
    )
    data = tmp_path / "data"
    code, _, err = evdvsr.cli(["simulate", "--synthetic", "--config", str(cfg), "--clips", "1", "--out", str(data)])
    assert code == 0, err
    run = tmp_path / "run"
    code, _, err = evdvsr.cli(["train", "--config", str(cfg), "--set", f"train.dataset={data}",
                               "--total-iters", "0", "--out", str(run)])
    assert code == 0, err

    model = evdvsr.Model.from_checkpoint(str(run / "latest.pt"))
    assert model.iteration == 0
    out = model.super_resolve(str(data / "clip_000"))
    assert out.shape == (3, 3, 64, 64)

    code, _, _ = evdvsr.cli(["eval", "--checkpoint", str(run / "latest.pt"), "--dataset", str(data),
                             "--no-grids", "--out", str(tmp_path / "ev")])
    assert code == 0
    model_lines = (tmp_path / "ev" / "metrics.txt").read_text().splitlines()
    bicubic_lines = (tmp_path / "ev" / "bicubic_metrics.txt").read_text().splitlines()
    assert model_lines == bicubic_lines

    assert evdvsr.cli(["frobnicate"])[0] == 1


def test_synthetic_clip_is_seeded():
    a = evdvsr.synthetic_clip(2, seed=3, hr_size=32)
    b = evdvsr.synthetic_clip(2, seed=3, hr_size=32)
    np.testing.assert_array_equal(a["frames"], b["frames"])
    assert a["frames"].shape[1:] == (3, 32, 32)
    assert a["frames"].shape[0] == 2 * a["sharp_per_exposure"] + a["gap"]


def test_selfcheck_flags_only_the_injected_fault():
    results = evdvsr.selfcheck(break_dcn_clamp=True)
    failed = [r["name"] for r in results if not r["pass"]]
    assert failed == ["model.dcn_offset_bound"]

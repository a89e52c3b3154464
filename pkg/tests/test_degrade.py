import numpy as np
import pytest

from sparkprop import degrade as D
from sparkprop.degrade import DegradationConfig


class TestSynthClip:
    @pytest.mark.parametrize("kind", D.CLIP_KINDS)
    def test_deterministic_under_seed(self, kind):
        a = D.synth_clip(kind, 9, 32, 32, np.random.default_rng(11))
        b = D.synth_clip(kind, 9, 32, 32, np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("kind", D.CLIP_KINDS)
    def test_every_frame_moves(self, kind):
        clip = D.synth_clip(kind, 9, 32, 32, np.random.default_rng(5))
        for t in range(1, 9):
            assert np.abs(clip[t] - clip[t - 1]).mean() > 0

    def test_translation_with_wrap_is_exact(self):
        # pick a seed, find the smallest t with integer pixel shift, compare to roll
        for seed in range(10):
            clip, (dx, dy) = D.synth_clip_with_motion(
                "moving_checker", 9, 32, 32, np.random.default_rng(seed)
            )
            for t in range(1, 9):
                sx, sy = t * dx, t * dy
                if sx == int(sx) and sy == int(sy):
                    rolled = np.roll(clip[0], (int(sy), int(sx)), axis=(0, 1))
                    np.testing.assert_array_equal(clip[t], rolled)
                    break

    def test_velocity_at_least_half_pixel(self):
        for seed in range(20):
            _, (dx, dy) = D.synth_clip_with_motion("textured_blobs", 5, 16, 16, np.random.default_rng(seed))
            assert max(abs(dx), abs(dy)) >= 0.5

    def test_checker_has_high_frequency_content(self):
        clip = D.synth_clip("moving_checker", 5, 64, 64, np.random.default_rng(1))
        # half-period (4px) contrast must be substantial: period <= 8px
        f = clip[0, :, :, 0]
        assert np.abs(f[:, 4:] - f[:, :-4]).max() > 0.2

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            D.synth_clip("plasma", 5, 16, 16, np.random.default_rng(0))

    def test_bad_length_rejected(self):
        with pytest.raises(ValueError, match="mod 4"):
            D.synth_clip("moving_checker", 4, 16, 16, np.random.default_rng(0))


class TestDegrade:
    def test_identity_configuration(self):
        hr = D.synth_clip("textured_blobs", 5, 16, 16, np.random.default_rng(2))
        cfg = DegradationConfig(blur_sigma=(0, 0), downscale=1, noise_sigma=(0, 0), blockiness=0)
        out = D.degrade_video(hr, cfg, np.random.default_rng(0))
        np.testing.assert_allclose(out, hr, atol=1e-6)

    def test_downscale_shape(self):
        hr = D.synth_clip("moving_checker", 5, 64, 64, np.random.default_rng(3))
        cfg = DegradationConfig(blur_sigma=(0.5, 0.5), downscale=2, noise_sigma=(0, 0))
        assert D.degrade_video(hr, cfg, np.random.default_rng(0)).shape == (5, 32, 32, 3)

    def test_noise_sigma_statistics(self):
        hr = np.full((4, 32, 32, 3), 0.5, dtype=np.float32)
        cfg = DegradationConfig(blur_sigma=(0, 0), downscale=1, noise_sigma=(0.05, 0.05))
        out = D.degrade_video(hr, cfg, np.random.default_rng(9))
        dev = (out.astype(np.float64) - 0.5).std()
        assert 0.04 <= dev <= 0.06

    def test_monotone_in_noise_sigma(self):
        hr = np.full((2, 32, 32, 3), 0.5, dtype=np.float32)
        devs = []
        for s in (0.01, 0.03, 0.08):
            cfg = DegradationConfig(blur_sigma=(0, 0), downscale=1, noise_sigma=(s, s))
            out = D.degrade_video(hr, cfg, np.random.default_rng(4))
            devs.append(np.abs(out - hr).mean())
        assert devs[0] < devs[1] < devs[2]

    def test_deterministic_under_seed(self):
        hr = D.synth_clip("drifting_text", 5, 32, 32, np.random.default_rng(6))
        cfg = DegradationConfig()
        a = D.degrade_video(hr, cfg, np.random.default_rng(1))
        b = D.degrade_video(hr, cfg, np.random.default_rng(1))
        np.testing.assert_array_equal(a, b)

    def test_divisibility_enforced(self):
        hr = np.zeros((2, 30, 30, 3), dtype=np.float32)
        with pytest.raises(ValueError, match="divisible"):
            D.degrade_video(hr, DegradationConfig(downscale=4), np.random.default_rng(0))

    def test_blockiness_quantizes(self):
        rng = np.random.default_rng(8)
        hr = rng.uniform(0, 1, (1, 16, 16, 3)).astype(np.float32)
        cfg = DegradationConfig(blur_sigma=(0, 0), downscale=1, noise_sigma=(0, 0), blockiness=0.2)
        out = D.degrade_video(hr, cfg, np.random.default_rng(0))
        assert np.abs(out - hr).max() > 1e-3


class TestUpsample:
    def test_identity_when_sizes_match(self):
        rng = np.random.default_rng(1)
        lr = rng.uniform(0, 1, (2, 8, 8, 3)).astype(np.float32)
        np.testing.assert_array_equal(D.upsample_to(lr, 8, 8), lr)

    def test_constant_stays_constant(self):
        lr = np.full((2, 4, 4, 3), 0.37, dtype=np.float32)
        out = D.upsample_to(lr, 16, 16)
        np.testing.assert_allclose(out, 0.37, atol=1e-6)

    def test_corner_anchored_gradient_2x(self):
        # 2x2 corner gradient -> 4x4 with corner anchoring: interpolation
        # points at 0, 1/3, 2/3, 1 along each axis
        img = np.array([[0.0, 1.0], [2.0, 3.0]]) / 3.0
        lr = np.repeat(img[None, :, :, None], 3, axis=3).astype(np.float32)
        out = D.upsample_to(lr, 4, 4)
        xs = np.array([0, 1, 2, 3]) / 3.0
        want = (xs[None, :] * 1.0 + xs[:, None] * 2.0) / 3.0
        np.testing.assert_allclose(out[0, :, :, 0], want, atol=1e-6)
        assert out[0, 0, 0, 0] == lr[0, 0, 0, 0]
        assert out[0, 3, 3, 0] == pytest.approx(lr[0, 1, 1, 0])

    def test_pair_contract(self):
        hr, lr_up = D.make_pair("moving_checker", 9, 32, 32, DegradationConfig(downscale=2), seed=3)
        assert hr.shape == lr_up.shape == (9, 32, 32, 3)


def test_dataset_manifest_roundtrip(tmp_path):
    cfg = DegradationConfig(downscale=2)
    pairs = [D.make_pair("textured_blobs", 5, 16, 16, cfg, seed=s) for s in (1, 2)]
    D.write_dataset(str(tmp_path), pairs, seeds=[1, 2])
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "hr=clip0000_hr.y4m;lr=clip0000_lr.y4m;seed=1" in manifest
    loaded = D.load_dataset(str(tmp_path))
    assert len(loaded) == 2
    for (hr, lr), (hr2, lr2) in zip(pairs, loaded):
        assert np.abs(hr - hr2).max() <= 1.5 / 255
        assert np.abs(lr - lr2).max() <= 1.5 / 255

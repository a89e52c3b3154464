import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparkprop import denoiser as dn
from sparkprop.codec import CodecParams, encode
from sparkprop.conditioning import assemble_condition
from sparkprop.denoiser import (
    TIMESTEP,
    DenoiserConfig,
    DenoiserParams,
    GuidanceConfig,
    init_denoiser,
    predict,
    restore,
    rfg_combine,
)

from helpers import checker_video


@pytest.fixture(scope="module")
def small_net():
    return init_denoiser(DenoiserConfig(in_channels=8, out_channels=4, width=16, blocks=4, norm_groups=4), seed=0)


def joint(rng, L=9, c=4, hw=4):
    z_lr = rng.standard_normal((L, c, hw, hw)).astype(np.float32)
    z_ref = rng.standard_normal((L, c, hw, hw)).astype(np.float32)
    return z_lr, z_ref


class TestPredict:
    def test_initial_prediction_equals_lr_half(self, small_net):
        rng = np.random.default_rng(0)
        z_lr, z_ref = joint(rng)
        out = predict(assemble_condition(z_lr, z_ref), TIMESTEP, small_net)
        np.testing.assert_allclose(out.data, z_lr, atol=1e-6)

    def test_output_halves_channels(self, small_net):
        rng = np.random.default_rng(1)
        z_lr, z_ref = joint(rng)
        out = predict(assemble_condition(z_lr, z_ref), TIMESTEP, small_net)
        assert out.shape == z_lr.shape

    def test_wrong_timestep_rejected(self, small_net):
        rng = np.random.default_rng(2)
        z_lr, z_ref = joint(rng)
        with pytest.raises(ValueError, match="timestep"):
            predict(assemble_condition(z_lr, z_ref), 398, small_net)

    def test_channel_mismatch_rejected(self, small_net):
        with pytest.raises(ValueError, match="channels"):
            predict(np.zeros((2, 6, 4, 4), dtype=np.float32), TIMESTEP, small_net)

    def test_receptive_field_spans_clip(self):
        # after the temporal-mixing blocks, perturbing latent frame 0 must
        # reach frame 8; needs non-zero head, so bump the output projection
        net = init_denoiser(DenoiserConfig(8, 4, width=16, blocks=4, norm_groups=4), seed=3)
        rng = np.random.default_rng(3)
        for k, v in net.params.items():
            if k.startswith("out.") and k.endswith(".w"):
                v.data = rng.standard_normal(v.data.shape).astype(np.float32) * 0.1
        z_lr, z_ref = joint(rng)
        base = predict(assemble_condition(z_lr, z_ref), TIMESTEP, net).data
        z_lr2 = z_lr.copy()
        z_lr2[0] += 1.0
        pert = predict(assemble_condition(z_lr2, z_ref), TIMESTEP, net).data
        assert np.abs(pert[8] - base[8]).max() > 0

    def test_deterministic(self, small_net):
        rng = np.random.default_rng(4)
        z_in = assemble_condition(*joint(rng))
        a = predict(z_in, TIMESTEP, small_net).data
        b = predict(z_in, TIMESTEP, small_net).data
        np.testing.assert_array_equal(a, b)


class TestRfg:
    def test_s1_collapses_to_cond(self):
        rng = np.random.default_rng(0)
        cond, uncond = rng.standard_normal((2, 3, 4, 2, 2)).astype(np.float32)
        np.testing.assert_array_equal(rfg_combine(cond, uncond, 1.0), cond)

    def test_s0_collapses_to_uncond(self):
        rng = np.random.default_rng(1)
        cond, uncond = rng.standard_normal((2, 3, 4, 2, 2)).astype(np.float32)
        np.testing.assert_array_equal(rfg_combine(cond, uncond, 0.0), uncond)

    def test_extrapolation_beyond_conditional(self):
        cond = np.full((2, 2), 1.0)
        uncond = np.zeros((2, 2))
        np.testing.assert_allclose(rfg_combine(cond, uncond, 1.2), 1.2)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="differ"):
            rfg_combine(np.zeros((2, 2)), np.zeros((3, 2)), 1.0)

    def test_negative_scale_rejected(self):
        with pytest.raises(ValueError):
            rfg_combine(np.zeros(2), np.zeros(2), -0.1)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.sampled_from([0.5, 0.8, 1.0, 1.2, 1.5]),
    )
    def test_linearity_property(self, seed, s):
        rng = np.random.default_rng(seed)
        cond = rng.standard_normal((4, 8)).astype(np.float64)
        uncond = rng.standard_normal((4, 8)).astype(np.float64)
        v0 = rfg_combine(cond, uncond, 0.0)
        v1 = rfg_combine(cond, uncond, 1.0)
        vs = rfg_combine(cond, uncond, s)
        lhs = vs - v0
        rhs = s * (v1 - v0)
        denom = max(np.abs(rhs).max(), 1e-12)
        assert np.abs(lhs - rhs).max() / denom < 1e-6

    def test_midpoint_interpolation(self):
        rng = np.random.default_rng(5)
        cond = rng.standard_normal((3, 5))
        uncond = rng.standard_normal((3, 5))
        mid = rfg_combine(cond, uncond, 0.5)
        np.testing.assert_allclose(mid, 0.5 * (cond + uncond), atol=1e-9)


class TestRestore:
    @pytest.fixture()
    def setup(self):
        codec = CodecParams(mode="analytic", spatial_factor=4)
        cfg = DenoiserConfig(2 * codec.latent_channels, codec.latent_channels, width=16, blocks=2, norm_groups=4)
        net = init_denoiser(cfg, seed=1)
        rng = np.random.default_rng(9)
        for k, v in net.params.items():
            if k == "out.w":
                v.data = rng.standard_normal(v.data.shape).astype(np.float32) * 0.05
        video = checker_video(t=5, h=16, w=16)
        z_lr = encode(video, codec)
        z_ref = np.zeros_like(z_lr)
        z_ref[0] = encode(video[:1], codec)[0]
        return codec, net, z_lr, z_ref

    def test_zero_ref_any_scale_matches_s0(self, setup):
        codec, net, z_lr, _ = setup
        zero = np.zeros_like(z_lr)
        a = restore(z_lr, zero, GuidanceConfig(1.7), net, codec)
        b = restore(z_lr, zero, GuidanceConfig(0.0), net, codec)
        np.testing.assert_array_equal(a, b)

    def test_s1_fast_path_matches_two_call_path(self, setup, monkeypatch):
        codec, net, z_lr, z_ref = setup
        fast = restore(z_lr, z_ref, GuidanceConfig(1.0), net, codec)

        calls = []
        real_predict = dn.predict

        def counting_predict(z_in, t, params):
            calls.append(1)
            return real_predict(z_in, t, params)

        monkeypatch.setattr(dn, "predict", counting_predict)
        again = restore(z_lr, z_ref, GuidanceConfig(1.0), net, codec)
        assert len(calls) == 1  # the optimization: one pass at s == 1
        np.testing.assert_array_equal(fast, again)

        calls.clear()
        restore(z_lr, z_ref, GuidanceConfig(1.3), net, codec)
        assert len(calls) == 2

    def test_latent_midpoint_linearity(self, setup):
        codec, net, z_lr, z_ref = setup
        cond = predict(assemble_condition(z_lr, z_ref), TIMESTEP, net).data
        uncond = predict(assemble_condition(z_lr, np.zeros_like(z_ref)), TIMESTEP, net).data
        mid = rfg_combine(cond, uncond, 0.5)
        lo = rfg_combine(cond, uncond, 0.0)
        hi = rfg_combine(cond, uncond, 1.0)
        np.testing.assert_allclose(mid, 0.5 * (lo + hi), atol=1e-6)

    def test_restore_output_is_valid_video(self, setup):
        codec, net, z_lr, z_ref = setup
        out = restore(z_lr, z_ref, GuidanceConfig(1.2), net, codec)
        assert out.shape == (5, 16, 16, 3)
        assert out.min() >= 0.0 and out.max() <= 1.0


def test_config_enforces_channel_contract():
    with pytest.raises(ValueError, match="twice"):
        DenoiserConfig(in_channels=24, out_channels=16)


def test_checkpoint_roundtrip(small_net):
    from sparkprop.denoiser import denoiser_from_arrays, denoiser_to_arrays

    arrays, meta = denoiser_to_arrays(small_net)
    restored = denoiser_from_arrays(arrays, meta)
    rng = np.random.default_rng(0)
    z = rng.standard_normal((3, 8, 4, 4)).astype(np.float32)
    np.testing.assert_array_equal(
        predict(z, TIMESTEP, small_net).data, predict(z, TIMESTEP, restored).data
    )

"""Gradient-check case table: one entry per differentiable primitive.

Each case builds a deterministic scalar function plus the point to check.
Losses are centered at the point so the finite-difference numerator avoids
large-magnitude cancellation, and projection weights keep per-coordinate
gradients away from zero where the op allows it.
"""

import numpy as np

from sparkprop import tensor as T
from sparkprop.tensor import Tensor


def rand(rng, *shape, dtype=np.float64):
    return rng.standard_normal(shape).astype(dtype)


GRADCHECK_CASES = []


def gradcheck_case(fn):
    GRADCHECK_CASES.append(fn)
    return fn


def _proj(rng, shape, dtype, signed=True):
    # random O(1) projection keeps every output coordinate's gradient generic
    r = rng.uniform(0.5, 1.5, size=shape)
    if signed:
        r = r * rng.choice([-1.0, 1.0], size=shape)
    return r.astype(dtype)


def centered(core, point, proj):
    """Loss sum(proj * (core(x) - core(x0))): zero at the point, so the
    finite-difference numerator is free of large-magnitude cancellation."""
    with T.no_grad():
        base = core([Tensor(p) for p in point]).data.copy()
    b = Tensor(base)
    pt = Tensor(proj)
    return lambda ls: T.tsum(T.mul(T.sub(core(ls), b), pt))


def upos(rng, *shape, dtype=np.float64, lo=0.1, hi=1.0):
    return rng.uniform(lo, hi, shape).astype(dtype)


@gradcheck_case
def case_add(rng, dtype):
    point = [rand(rng, 4, 5, dtype=dtype), rand(rng, 4, 5, dtype=dtype)]
    return centered(lambda ls: T.add(ls[0], ls[1]), point, _proj(rng, (4, 5), dtype)), point


@gradcheck_case
def case_sub_mul(rng, dtype):
    point = [upos(rng, 3, 4, dtype=dtype, lo=0.2, hi=1.5), upos(rng, 3, 4, dtype=dtype, lo=0.2, hi=1.5)]
    return centered(lambda ls: T.mul(T.sub(ls[0], ls[1]), ls[1]), point, _proj(rng, (3, 4), dtype)), point


@gradcheck_case
def case_div(rng, dtype):
    point = [upos(rng, 3, 4, dtype=dtype, lo=0.3), upos(rng, 3, 4, dtype=dtype, lo=0.5, hi=2.0)]
    return centered(lambda ls: T.div(ls[0], ls[1]), point, _proj(rng, (3, 4), dtype)), point


@gradcheck_case
def case_matmul(rng, dtype):
    point = [upos(rng, 3, 4, dtype=dtype), upos(rng, 4, 2, dtype=dtype)]
    return centered(lambda ls: T.matmul(ls[0], ls[1]), point, _proj(rng, (3, 2), dtype, signed=False)), point


@gradcheck_case
def case_silu(rng, dtype):
    # d/dx silu crosses zero near -1.28; stay right of it
    point = [upos(rng, 4, 4, dtype=dtype, lo=-0.5, hi=2.0)]
    return centered(lambda ls: T.silu(ls[0]), point, _proj(rng, (4, 4), dtype)), point


@gradcheck_case
def case_leaky_relu(rng, dtype):
    x = rand(rng, 4, 4, dtype=dtype)
    x = (x + np.sign(x) * 0.05).astype(dtype)  # keep away from the kink
    point = [x]
    return centered(lambda ls: T.leaky_relu(ls[0], 0.1), point, _proj(rng, (4, 4), dtype)), point


@gradcheck_case
def case_sq_diff(rng, dtype):
    point = [upos(rng, 3, 3, dtype=dtype, lo=0.5, hi=1.5), upos(rng, 3, 3, dtype=dtype, lo=-1.5, hi=-0.5)]
    return centered(lambda ls: T.sq_diff(ls[0], ls[1]), point, _proj(rng, (3, 3), dtype)), point


@gradcheck_case
def case_conv2d(rng, dtype):
    point = [upos(rng, 1, 2, 4, 4, dtype=dtype), upos(rng, 2, 2, 3, 3, dtype=dtype, lo=0.2, hi=0.8), upos(rng, 2, dtype=dtype)]
    return (
        centered(lambda ls: T.conv2d(ls[0], ls[1], ls[2]), point, _proj(rng, (1, 2, 4, 4), dtype, signed=False)),
        point,
    )


@gradcheck_case
def case_conv2d_strided(rng, dtype):
    point = [upos(rng, 1, 2, 6, 6, dtype=dtype), upos(rng, 2, 2, 3, 3, dtype=dtype, lo=0.2, hi=0.8)]
    return (
        centered(
            lambda ls: T.conv2d(ls[0], ls[1], stride=2, padding=1),
            point,
            _proj(rng, (1, 2, 3, 3), dtype, signed=False),
        ),
        point,
    )


@gradcheck_case
def case_conv3d(rng, dtype):
    point = [upos(rng, 3, 2, 4, 4, dtype=dtype), upos(rng, 2, 2, 2, 3, 3, dtype=dtype, lo=0.2, hi=0.8), upos(rng, 2, dtype=dtype)]
    return (
        centered(lambda ls: T.conv3d_causal(ls[0], ls[1], ls[2]), point, _proj(rng, (3, 2, 4, 4), dtype, signed=False)),
        point,
    )


@gradcheck_case
def case_conv3d_strided(rng, dtype):
    point = [upos(rng, 5, 2, 4, 4, dtype=dtype), upos(rng, 2, 2, 4, 3, 3, dtype=dtype, lo=0.2, hi=0.8)]
    return (
        centered(
            lambda ls: T.conv3d_causal(ls[0], ls[1], stride=(4, 1, 1)),
            point,
            _proj(rng, (2, 2, 4, 4), dtype, signed=False),
        ),
        point,
    )


@gradcheck_case
def case_group_norm(rng, dtype):
    point = [rand(rng, 2, 4, 3, 3, dtype=dtype), upos(rng, 4, dtype=dtype, lo=0.5, hi=1.5), rand(rng, 4, dtype=dtype) * dtype(0.2)]
    return (
        centered(lambda ls: T.group_norm(ls[0], ls[1], ls[2], groups=2), point, _proj(rng, (2, 4, 3, 3), dtype)),
        point,
    )


@gradcheck_case
def case_concat_slice(rng, dtype):
    point = [rand(rng, 2, 3, 2, 2, dtype=dtype), rand(rng, 2, 2, 2, 2, dtype=dtype)]
    return (
        centered(lambda ls: T.narrow(T.concat_channels(ls[0], ls[1]), 1, 1, 4), point, _proj(rng, (2, 4, 2, 2), dtype)),
        point,
    )


@gradcheck_case
def case_pad(rng, dtype):
    point = [rand(rng, 2, 2, 3, 3, dtype=dtype)]
    return (
        centered(lambda ls: T.pad(ls[0], [(1, 0), (0, 0), (1, 1), (1, 1)]), point, _proj(rng, (3, 2, 5, 5), dtype)),
        point,
    )


@gradcheck_case
def case_upsample(rng, dtype):
    point = [rand(rng, 1, 2, 3, 3, dtype=dtype)]
    return centered(lambda ls: T.upsample_nearest(ls[0], 2), point, _proj(rng, (1, 2, 6, 6), dtype, signed=False)), point


@gradcheck_case
def case_downsample(rng, dtype):
    point = [rand(rng, 1, 2, 6, 6, dtype=dtype)]
    return centered(lambda ls: T.downsample_stride(ls[0], 2), point, _proj(rng, (1, 2, 3, 3), dtype)), point


@gradcheck_case
def case_space_depth(rng, dtype):
    point = [rand(rng, 2, 2, 4, 4, dtype=dtype)]
    return centered(lambda ls: T.space_to_depth(ls[0], 2), point, _proj(rng, (2, 8, 2, 2), dtype)), point


@gradcheck_case
def case_depth_space(rng, dtype):
    point = [rand(rng, 2, 8, 2, 2, dtype=dtype)]
    return centered(lambda ls: T.depth_to_space(ls[0], 2), point, _proj(rng, (2, 2, 4, 4), dtype)), point


@gradcheck_case
def case_video_groups(rng, dtype):
    point = [rand(rng, 5, 2, 2, 2, dtype=dtype)]
    return centered(lambda ls: T.video_to_groups(ls[0], 4), point, _proj(rng, (2, 8, 2, 2), dtype, signed=False)), point


@gradcheck_case
def case_groups_video(rng, dtype):
    point = [rand(rng, 2, 8, 2, 2, dtype=dtype)]
    return centered(lambda ls: T.groups_to_video(ls[0], 4), point, _proj(rng, (5, 2, 2, 2), dtype, signed=False)), point


@gradcheck_case
def case_mean_axes(rng, dtype):
    point = [rand(rng, 3, 4, 2, dtype=dtype)]
    return (
        centered(lambda ls: T.tmean(ls[0], axes=1, keepdims=True), point, _proj(rng, (3, 1, 2), dtype, signed=False)),
        point,
    )


@gradcheck_case
def case_composite_conv_silu_sum(rng, dtype):
    point = [upos(rng, 1, 3, 8, 8, dtype=dtype, lo=0.0, hi=1.0), upos(rng, 2, 3, 3, 3, dtype=dtype, lo=0.1, hi=0.4)]
    return centered(lambda ls: T.silu(T.conv2d(ls[0], ls[1])), point, _proj(rng, (1, 2, 8, 8), dtype, signed=False)), point



"""One-step conditional latent predictor plus reference-free guidance.

The network maps the 2C-channel joint condition straight to the C-channel
restored latent at one fixed timestep: residual blocks of causal 3D
convolutions with per-step group normalization and SiLU, and a
zero-initialized head added onto the LR half of the input, so the initial
prediction is exactly the LR latent.  Guidance linearly extrapolates
between the zero-reference prediction and the conditional one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .codec import CodecParams, decode
from .conditioning import assemble_condition
from .tensor import Tensor

TIMESTEP = 399  # the single supported denoising step; enters as a learned embedding


@dataclass
class DenoiserConfig:
    in_channels: int
    out_channels: int
    width: int = 64
    blocks: int = 4
    norm_groups: int = 8

    def __post_init__(self):
        if self.in_channels != 2 * self.out_channels:
            raise ValueError(
                f"input channels {self.in_channels} must be twice the output {self.out_channels}"
            )


@dataclass
class DenoiserParams:
    config: DenoiserConfig
    params: dict[str, Tensor] = field(default_factory=dict)


@dataclass(frozen=True)
class GuidanceConfig:
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError(f"guidance scale must be nonnegative, got {self.scale}")


def init_denoiser(config: DenoiserConfig, seed: int = 0, dtype=np.float32) -> DenoiserParams:
    rng = np.random.default_rng(seed)
    w = config.width
    p: dict[str, Tensor] = {}
    p["in.w"] = T.he_normal(rng, (w, config.in_channels, 1, 1, 1), config.in_channels, dtype)
    p["in.b"] = T.zeros_param((w,), dtype)
    p["t_embed"] = Tensor(
        (rng.standard_normal((1, w, 1, 1)) * 0.02).astype(dtype), requires_grad=True
    )
    for i in range(config.blocks):
        for j in (1, 2):
            p[f"b{i}.gn{j}.g"] = T.ones_param((w,), dtype)
            p[f"b{i}.gn{j}.b"] = T.zeros_param((w,), dtype)
            p[f"b{i}.conv{j}.w"] = T.he_normal(rng, (w, w, 3, 3, 3), w * 27, dtype)
            p[f"b{i}.conv{j}.b"] = T.zeros_param((w,), dtype)
    p["out.gn.g"] = T.ones_param((w,), dtype)
    p["out.gn.b"] = T.zeros_param((w,), dtype)
    p["out.w"] = T.zeros_param((config.out_channels, w, 1, 1, 1), dtype)
    p["out.b"] = T.zeros_param((config.out_channels,), dtype)
    # zero-initialized linear path from the joint condition straight to the
    # output: reference content need not squeeze through the trunk width
    p["direct.w"] = T.zeros_param((config.out_channels, config.in_channels, 1, 1, 1), dtype)
    return DenoiserParams(config, p)


def predict(z_in, t: int, net: DenoiserParams) -> Tensor:
    """Joint condition (L, 2C, H', W') -> restored latent prediction (L, C, H', W')."""
    if t != TIMESTEP:
        raise ValueError(f"unsupported timestep {t}; the one-step model runs at t={TIMESTEP}")
    x = z_in if isinstance(z_in, Tensor) else Tensor(np.asarray(z_in, dtype=np.float32))
    cfg = net.config
    if x.shape[1] != cfg.in_channels:
        raise ValueError(f"joint condition has {x.shape[1]} channels, model expects {cfg.in_channels}")
    p = net.params
    g = cfg.norm_groups
    h = T.conv3d_causal(x, p["in.w"], p["in.b"]) + p["t_embed"]
    for i in range(cfg.blocks):
        r = T.silu(T.group_norm(h, p[f"b{i}.gn1.g"], p[f"b{i}.gn1.b"], groups=g))
        r = T.conv3d_causal(r, p[f"b{i}.conv1.w"], p[f"b{i}.conv1.b"])
        r = T.silu(T.group_norm(r, p[f"b{i}.gn2.g"], p[f"b{i}.gn2.b"], groups=g))
        r = T.conv3d_causal(r, p[f"b{i}.conv2.w"], p[f"b{i}.conv2.b"])
        h = h + r
    o = T.silu(T.group_norm(h, p["out.gn.g"], p["out.gn.b"], groups=g))
    o = T.conv3d_causal(o, p["out.w"], p["out.b"])
    base = T.narrow(x, 1, 0, cfg.out_channels) + o
    if "direct.w" in p:  # older checkpoints predate the direct path
        base = base + T.conv3d_causal(x, p["direct.w"])
    return base


def rfg_combine(cond_pred: np.ndarray, uncond_pred: np.ndarray, s: float) -> np.ndarray:
    """uncond + s * (cond - uncond), elementwise."""
    cond_pred = np.asarray(cond_pred)
    uncond_pred = np.asarray(uncond_pred)
    if cond_pred.shape != uncond_pred.shape:
        raise ValueError(f"prediction shapes differ: {cond_pred.shape} vs {uncond_pred.shape}")
    if s < 0:
        raise ValueError(f"guidance scale must be nonnegative, got {s}")
    if s == 1.0:
        return cond_pred.copy()
    if s == 0.0:
        return uncond_pred.copy()
    return uncond_pred + s * (cond_pred - uncond_pred)


def restore(
    z_lr: np.ndarray,
    z_ref: np.ndarray,
    guidance: GuidanceConfig,
    net: DenoiserParams,
    codec: CodecParams,
) -> np.ndarray:
    """Guided restoration: one or two predictor passes, combine, decode.

    With s == 1 (or an all-zero reference, where both passes would coincide)
    exactly one predictor call is made.
    """
    s = guidance.scale
    with T.no_grad():
        if not np.any(z_ref):
            pred = predict(assemble_condition(z_lr, np.zeros_like(z_lr)), TIMESTEP, net).data
        elif s == 1.0:
            pred = predict(assemble_condition(z_lr, z_ref), TIMESTEP, net).data
        else:
            cond = predict(assemble_condition(z_lr, z_ref), TIMESTEP, net).data
            uncond = predict(assemble_condition(z_lr, np.zeros_like(z_lr)), TIMESTEP, net).data
            pred = rfg_combine(cond, uncond, s)
    return decode(pred, codec)


def denoiser_to_arrays(net: DenoiserParams) -> tuple[dict[str, np.ndarray], dict]:
    meta = {
        "denoiser_in_channels": net.config.in_channels,
        "denoiser_out_channels": net.config.out_channels,
        "denoiser_width": net.config.width,
        "denoiser_blocks": net.config.blocks,
        "denoiser_norm_groups": net.config.norm_groups,
    }
    return {f"denoiser.{k}": v.data for k, v in net.params.items()}, meta


def denoiser_from_arrays(arrays: dict[str, np.ndarray], meta: dict, trainable: bool = False) -> DenoiserParams:
    cfg = DenoiserConfig(
        in_channels=meta["denoiser_in_channels"],
        out_channels=meta["denoiser_out_channels"],
        width=meta["denoiser_width"],
        blocks=meta["denoiser_blocks"],
        norm_groups=meta["denoiser_norm_groups"],
    )
    prefix = "denoiser."
    params = {
        k[len(prefix) :]: Tensor(v.copy(), requires_grad=trainable)
        for k, v in arrays.items()
        if k.startswith(prefix)
    }
    if not params:
        raise ValueError("checkpoint holds no denoiser parameters")
    return DenoiserParams(cfg, params)

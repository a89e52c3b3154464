"""Two-stage training: latent-space MSE, then pixel-space joint video/image.

Stage 1 freezes the codec and regresses the predicted latent onto the HR
latent under randomly sampled, augmented, dropout-gated keyframe
conditions.  Stage 2 decodes predictions and mixes video steps (MSE +
perceptual surrogate + frame-consistency) with image steps (single frame,
zero reference latent, no frame term) at probability phi per step.

Every iteration seeds its own generator from (seed, iteration), so a run
resumed from a checkpoint is bit-identical to an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .checkpoint import load_checkpoint, save_checkpoint
from .codec import CodecParams, codec_from_arrays, codec_to_arrays, decode_t, encode, to_tchw
from .conditioning import (
    TRAIN_AUGMENT,
    AugmentConfig,
    ReferenceBundle,
    apply_reference_dropout,
    assemble_condition,
    augment_reference,
    build_sparse_reference,
    select_keyframes,
)
from .denoiser import (
    TIMESTEP,
    DenoiserConfig,
    DenoiserParams,
    denoiser_from_arrays,
    denoiser_to_arrays,
    init_denoiser,
    predict,
)
from .optim import AdamW
from .tensor import Tensor
from .video_io import LUMA_WEIGHTS


@dataclass
class TrainConfig:
    stage: int = 1
    iterations: int = 1500
    lr: float = 1e-3
    lambda_dists: float = 1.0
    lambda_frame: float = 1.0
    p_drop: float = 0.1
    video_prob: float = 0.5  # phi: probability a stage-2 step is a video step
    batch_size: int = 1
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.95)
    weight_decay: float = 0.0
    checkpoint_every: int = 250
    augment: AugmentConfig = field(default_factory=lambda: TRAIN_AUGMENT)

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {self.stage}")
        if self.lambda_dists < 0 or self.lambda_frame < 0:
            raise ValueError("loss weights must be nonnegative")
        if not 0.0 <= self.video_prob <= 1.0:
            raise ValueError("video_prob must lie in [0, 1]")
        if not 0.0 <= self.p_drop <= 1.0:
            raise ValueError("p_drop must lie in [0, 1]")

    def config_hash(self) -> str:
        text = ";".join(f"{k}={v}" for k, v in sorted(vars(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def config_to_kv(cfg: TrainConfig) -> str:
    lines = []
    for k, v in sorted(vars(cfg).items()):
        if isinstance(v, AugmentConfig):
            continue
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def config_from_kv(text: str, base: TrainConfig | None = None) -> TrainConfig:
    cfg = base or TrainConfig()
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        k, v = line.split("=", 1)
        fields[k.strip()] = v.strip()
    kwargs = {}
    for k, v in fields.items():
        if k in ("stage", "iterations", "batch_size", "seed", "checkpoint_every"):
            kwargs[k] = int(v)
        elif k in ("lr", "lambda_dists", "lambda_frame", "p_drop", "video_prob", "weight_decay"):
            kwargs[k] = float(v)
        elif k == "betas":
            kwargs[k] = tuple(float(x) for x in v.split(","))
    return replace(cfg, **kwargs)


# ---------------------------------------------------------------------------
# losses


@dataclass(frozen=True)
class FilterBank:
    """Fixed seeded multi-scale filters for the perceptual surrogate.

    Identical construction across training and evaluation: same seed, same
    filters.  Immutable after creation.
    """

    filters: np.ndarray  # (K, 1, k, k), zero-mean, unit-norm
    scales: int = 3

    DEFAULT_SEED = 1986

    @classmethod
    def create(cls, num_filters: int = 8, size: int = 5, seed: int = DEFAULT_SEED, scales: int = 3):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((num_filters, 1, size, size)).astype(np.float32)
        f -= f.mean(axis=(2, 3), keepdims=True)
        f /= np.sqrt((f**2).sum(axis=(2, 3), keepdims=True))
        f.flags.writeable = False
        return cls(filters=f, scales=scales)


_LUMA_W = LUMA_WEIGHTS.astype(np.float32).reshape(1, 3, 1, 1)
_POOL_W = np.full((1, 1, 2, 2), 0.25, dtype=np.float32)


def _as_pixel_tensor(v) -> Tensor:
    """(T, H, W, 3) array or (T, 3, H, W) Tensor -> (T, 3, H, W) Tensor."""
    if isinstance(v, Tensor):
        return v
    return Tensor(to_tchw(np.asarray(v, dtype=np.float32)))


def dists_surrogate(pred, gt, bank: FilterBank) -> Tensor:
    """Texture/structure dissimilarity in [0, 2]; 0 iff responses coincide.

    Per scale and filter: texture compares response means, structure is the
    normalized cross-correlation of responses; both average to a similarity
    that is subtracted from 1.
    """
    p = _as_pixel_tensor(pred)
    g = _as_pixel_tensor(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    luma_w = Tensor(_LUMA_W.astype(p.data.dtype))
    pool_w = Tensor(_POOL_W.astype(p.data.dtype))
    filt = Tensor(bank.filters.astype(p.data.dtype))
    yp = T.conv2d(p, luma_w, padding=0)
    yg = T.conv2d(g, luma_w, padding=0)
    c = 1e-3
    sims = []
    for scale in range(bank.scales):
        if scale > 0:
            yp = T.conv2d(yp, pool_w, stride=2, padding=0)
            yg = T.conv2d(yg, pool_w, stride=2, padding=0)
        rp = T.conv2d(yp, filt)  # same padding keeps small pyramid levels nonempty
        rg = T.conv2d(yg, filt)
        mp = T.tmean(rp, axes=(2, 3), keepdims=True)
        mg = T.tmean(rg, axes=(2, 3), keepdims=True)
        texture = T.div(mp * mg * 2.0 + c, mp * mp + mg * mg + c)
        dp = rp - mp
        dg = rg - mg
        vp = T.tmean(dp * dp, axes=(2, 3), keepdims=True)
        vg = T.tmean(dg * dg, axes=(2, 3), keepdims=True)
        cov = T.tmean(dp * dg, axes=(2, 3), keepdims=True)
        structure = T.div(cov * 2.0 + c, vp + vg + c)
        sims.append(T.tmean((texture + structure) * 0.5))
    sim = sims[0]
    for s in sims[1:]:
        sim = sim + s
    return 1.0 - sim * (1.0 / bank.scales)


def frame_consistency_loss(pred, gt) -> Tensor:
    """MSE between temporal differences of prediction and ground truth."""
    p = _as_pixel_tensor(pred)
    g = _as_pixel_tensor(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    t = p.shape[0]
    if t < 2:
        raise ValueError("frame consistency needs at least two frames")
    dp = T.narrow(p, 0, 1, t - 1) - T.narrow(p, 0, 0, t - 1)
    dg = T.narrow(g, 0, 1, t - 1) - T.narrow(g, 0, 0, t - 1)
    return T.tmean(T.sq_diff(dp, dg))


def stage2_video_loss(pred, gt, lambda_dists: float, lambda_frame: float, bank: FilterBank) -> Tensor:
    """MSE + lambda1 * perceptual + lambda2 * frame consistency."""
    p = _as_pixel_tensor(pred)
    g = _as_pixel_tensor(gt)
    loss = T.tmean(T.sq_diff(p, g))
    if lambda_dists:
        loss = loss + lambda_dists * dists_surrogate(p, g, bank)
    if lambda_frame:
        loss = loss + lambda_frame * frame_consistency_loss(p, g)
    return loss


# ---------------------------------------------------------------------------
# training steps


@dataclass
class StepResult:
    loss: float
    components: dict[str, float]
    applied: bool


def _conditioned_input(
    hr: np.ndarray,
    z_lr: np.ndarray,
    codec: CodecParams,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample keyframes, augment HR references, apply dropout, concatenate."""
    t, h, w, _ = hr.shape
    keys = select_keyframes("random", t, rng=rng)
    refs = ReferenceBundle(
        images={k: augment_reference(hr[k], cfg.augment, rng) for k in keys}
    )
    z_ref = build_sparse_reference(refs, keys, codec, t, h, w)
    z_ref = apply_reference_dropout(z_ref, cfg.p_drop, rng)
    return assemble_condition(z_lr, z_ref)


def stage1_step(
    batch: list[tuple[np.ndarray, np.ndarray]],
    net: DenoiserParams,
    codec: CodecParams,
    cfg: TrainConfig,
    rng: np.random.Generator,
    opt: AdamW,
    latents: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> StepResult:
    """One latent-space step over (HR, LR-upsampled) clips; returns the loss.

    `latents` may carry precomputed (z_hr, z_lr) pairs aligned with `batch`
    to skip re-encoding under the frozen codec.
    """
    total = None
    for i, (hr, lr_up) in enumerate(batch):
        if latents is not None:
            z_hr, z_lr = latents[i]
        else:
            z_hr, z_lr = encode(hr, codec), encode(lr_up, codec)
        z_in = _conditioned_input(hr, z_lr, codec, cfg, rng)
        pred = predict(z_in, TIMESTEP, net)
        li = T.tmean(T.sq_diff(pred, Tensor(z_hr)))
        total = li if total is None else total + li
    loss = total * (1.0 / len(batch))
    value = loss.item()
    if not np.isfinite(value):
        opt.zero_grad()
        return StepResult(value, {"latent_mse": value}, applied=False)
    loss.backward()
    applied = opt.step()
    opt.zero_grad()
    return StepResult(value, {"latent_mse": value}, applied=applied)


def stage2_step(
    batch: list[tuple[np.ndarray, np.ndarray]],
    net: DenoiserParams,
    codec: CodecParams,
    cfg: TrainConfig,
    rng: np.random.Generator,
    opt: AdamW,
    bank: FilterBank,
    latents: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> StepResult:
    """One pixel-space step: video branch with probability phi, else image branch."""
    is_video = rng.random() < cfg.video_prob
    components: dict[str, float] = {"branch": 1.0 if is_video else 0.0}
    total = None
    for i, (hr, lr_up) in enumerate(batch):
        if is_video:
            if latents is not None:
                _, z_lr = latents[i]
            else:
                z_lr = encode(lr_up, codec)
            z_in = _conditioned_input(hr, z_lr, codec, cfg, rng)
            pred_latent = predict(z_in, TIMESTEP, net)
            pred_pixels = decode_t(pred_latent, codec)
            li = stage2_video_loss(
                pred_pixels, _as_pixel_tensor(hr), cfg.lambda_dists, cfg.lambda_frame, bank
            )
        else:
            t = hr.shape[0]
            ti = int(rng.integers(t))
            hr_img = hr[ti : ti + 1]
            lr_img = lr_up[ti : ti + 1]
            z_lr = encode(lr_img, codec)
            z_in = assemble_condition(z_lr, np.zeros_like(z_lr))  # image branch: zero latent
            pred_latent = predict(z_in, TIMESTEP, net)
            pred_pixels = decode_t(pred_latent, codec)
            g = _as_pixel_tensor(hr_img)
            li = T.tmean(T.sq_diff(pred_pixels, g))
            if cfg.lambda_dists:
                li = li + cfg.lambda_dists * dists_surrogate(pred_pixels, g, bank)
        total = li if total is None else total + li
    loss = total * (1.0 / len(batch))
    value = loss.item()
    if not np.isfinite(value):
        opt.zero_grad()
        return StepResult(value, components, applied=False)
    loss.backward()
    applied = opt.step()
    opt.zero_grad()
    components["loss"] = value
    return StepResult(value, components, applied=applied)


# ---------------------------------------------------------------------------
# run orchestration


def save_training_checkpoint(
    path: str,
    net: DenoiserParams,
    codec: CodecParams,
    opt: AdamW | None,
    cfg: TrainConfig,
    iteration: int,
):
    arrays, meta = denoiser_to_arrays(net)
    codec_arrays, codec_meta = codec_to_arrays(codec)
    arrays.update(codec_arrays)
    meta.update(codec_meta)
    if opt is not None:
        arrays.update(opt.state_arrays())
        meta["opt_step"] = opt.t
    meta.update(
        {
            "stage": cfg.stage,
            "iteration": iteration,
            "seed": cfg.seed,
            "config_hash": cfg.config_hash(),
        }
    )
    save_checkpoint(path, arrays, meta)


def load_training_checkpoint(path: str, trainable: bool = False):
    arrays, meta = load_checkpoint(path)
    net = denoiser_from_arrays(arrays, meta, trainable=trainable)
    codec = codec_from_arrays(arrays, meta)
    opt_state = {k: v for k, v in arrays.items() if k.startswith("opt.")}
    return net, codec, opt_state, meta


def train_run(
    cfg: TrainConfig,
    dataset: list[tuple[np.ndarray, np.ndarray]],
    out_path: str,
    codec: CodecParams | None = None,
    resume: str | None = None,
    log_path: str | None = None,
    width: int = 64,
    blocks: int = 4,
) -> str:
    """Run one training stage; returns the final checkpoint path.

    Stage 2 requires a stage-1 checkpoint via `resume`.  Checkpoints carry
    optimizer state and metadata so a resumed run reproduces an
    uninterrupted one bit-exactly in a single-threaded process.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if resume is not None:
        net, codec, opt_state, meta = load_training_checkpoint(resume, trainable=True)
        start = int(meta["iteration"]) if meta.get("stage") == cfg.stage else 0
    else:
        if cfg.stage == 2:
            raise ValueError("stage 2 requires a stage-1 checkpoint to resume from")
        if codec is None:
            codec = CodecParams(mode="analytic")
        net = init_denoiser(
            DenoiserConfig(2 * codec.latent_channels, codec.latent_channels, width=width, blocks=blocks),
            seed=cfg.seed,
        )
        opt_state, start = {}, 0

    opt = AdamW(net.params, lr=cfg.lr, betas=cfg.betas, weight_decay=cfg.weight_decay)
    if opt_state:
        opt.load_state_arrays(opt_state, int(load_checkpoint(resume)[1].get("opt_step", 0)))

    bank = FilterBank.create()
    latents = [(encode(hr, codec), encode(lr, codec)) for hr, lr in dataset]

    if cfg.iterations == 0 or start >= cfg.iterations:
        save_training_checkpoint(out_path, net, codec, opt, cfg, start)
        return out_path

    log_file = open(log_path, "a") if log_path else None
    if log_file and log_file.tell() == 0:
        log_file.write("iteration,stage,loss,latent_mse,branch\n")
    try:
        for it in range(start, cfg.iterations):
            rng = np.random.default_rng([cfg.seed, it])
            picks = rng.integers(0, len(dataset), size=cfg.batch_size)
            batch = [dataset[int(i)] for i in picks]
            lat = [latents[int(i)] for i in picks]
            if cfg.stage == 1:
                res = stage1_step(batch, net, codec, cfg, rng, opt, latents=lat)
            else:
                res = stage2_step(batch, net, codec, cfg, rng, opt, bank, latents=lat)
            if log_file:
                log_file.write(
                    f"{it},{cfg.stage},{res.loss:.8f},"
                    f"{res.components.get('latent_mse', float('nan')):.8f},"
                    f"{res.components.get('branch', float('nan'))}\n"
                )
            if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
                save_training_checkpoint(out_path, net, codec, opt, cfg, it + 1)
    finally:
        if log_file:
            log_file.close()
    save_training_checkpoint(out_path, net, codec, opt, cfg, cfg.iterations)
    return out_path

"""Sparse reference latents, joint conditions, keyframe machinery.

The reference latent holds the encoded HR keyframe at each keyframe's
latent index and is exactly zero everywhere else; concatenating it onto the
LR video latent along the channel axis yields the 2C-channel joint
condition the denoiser consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .codec import CodecParams, encode_single_frame, latent_index_of, latent_length
from .video_io import LUMA_WEIGHTS

MIN_GAP = 4  # consecutive keyframes must be more than this many frames apart

ORIGINS = ("manual", "iframe", "random", "uniform")


class KeyframeError(ValueError):
    pass


@dataclass(frozen=True)
class KeyframeSet:
    indices: tuple[int, ...]
    origin: str = "manual"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise KeyframeError(f"unknown keyframe origin {self.origin!r}")
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(i < 0 for i in idx):
            raise KeyframeError(f"negative keyframe index in {idx}")
        for a, b in zip(idx, idx[1:]):
            if b <= a:
                raise KeyframeError(f"keyframe indices not strictly increasing: {idx}")
            if b - a <= MIN_GAP:
                raise KeyframeError(
                    f"keyframes {a} and {b} are {b - a} frames apart; gap must exceed {MIN_GAP}"
                )

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def validate_keyframes_for_clip(keys: KeyframeSet, num_frames: int):
    if keys.indices and keys.indices[-1] >= num_frames:
        raise KeyframeError(f"keyframe {keys.indices[-1]} outside clip of {num_frames} frames")
    bound = math.ceil(num_frames / 4)
    if len(keys) > bound:
        raise KeyframeError(f"{len(keys)} keyframes exceed the ceil(T/4) = {bound} bound")


def keyframes_to_str(keys: KeyframeSet) -> str:
    return f"k={','.join(str(i) for i in keys.indices)};origin={keys.origin}"


def keyframes_from_str(text: str) -> KeyframeSet:
    fields = dict(part.split("=", 1) for part in text.strip().split(";"))
    indices = tuple(int(v) for v in fields["k"].split(",")) if fields.get("k") else ()
    return KeyframeSet(indices, fields.get("origin", "manual"))


@dataclass(frozen=True)
class PromptMeta:
    """Opaque task/content text carried alongside a reference; never interpreted."""

    task: str = ""
    content: str = ""


@dataclass
class ReferenceBundle:
    images: dict[int, np.ndarray] = field(default_factory=dict)
    prompts: dict[int, PromptMeta] = field(default_factory=dict)

    def __post_init__(self):
        shapes = {np.asarray(img).shape for img in self.images.values()}
        if len(shapes) > 1:
            raise ValueError(f"reference images disagree on resolution: {sorted(shapes)}")


# ---------------------------------------------------------------------------
# sparse reference latent and joint condition


def build_sparse_reference(
    refs: ReferenceBundle,
    keys: KeyframeSet,
    codec: CodecParams,
    num_frames: int,
    height: int,
    width: int,
) -> np.ndarray:
    """(L, C, H', W') latent: encoded keyframe at its latent index, zero elsewhere."""
    for k in refs.images:
        if k not in keys.indices:
            raise KeyframeError(f"reference for frame {k} has no matching keyframe")
    validate_keyframes_for_clip(keys, num_frames)
    L = latent_length(num_frames, codec.temporal_factor)
    fs = codec.spatial_factor
    z = np.zeros((L, codec.latent_channels, height // fs, width // fs), dtype=np.float32)
    taken: dict[int, int] = {}
    for k, image in refs.images.items():
        ell = latent_index_of(k, codec.temporal_factor)
        if ell in taken:
            raise KeyframeError(f"keyframes {taken[ell]} and {k} collide on latent index {ell}")
        taken[ell] = k
        image = np.asarray(image, dtype=np.float32)
        if image.shape != (height, width, 3):
            raise ValueError(f"reference shape {image.shape} does not match clip {height}x{width}")
        z[ell] = encode_single_frame(image, codec)
    return z


def assemble_condition(z_lr: np.ndarray, z_ref: np.ndarray) -> np.ndarray:
    """Channel concatenation: [0, C) is the LR latent, [C, 2C) the reference."""
    if z_lr.shape != z_ref.shape:
        raise ValueError(f"latent shapes differ: {z_lr.shape} vs {z_ref.shape}")
    return np.concatenate([z_lr, z_ref], axis=1)


def split_condition(z_in: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = z_in.shape[1] // 2
    return z_in[:, :c], z_in[:, c:]


def apply_reference_dropout(z_ref: np.ndarray, p_drop: float, rng: np.random.Generator) -> np.ndarray:
    """With probability p_drop, the whole reference latent becomes zeros."""
    if not 0.0 <= p_drop <= 1.0:
        raise ValueError(f"p_drop must be in [0, 1], got {p_drop}")
    if p_drop > 0.0 and rng.random() < p_drop:
        return np.zeros_like(z_ref)
    return z_ref


# ---------------------------------------------------------------------------
# reference augmentation


@dataclass(frozen=True)
class AugmentConfig:
    """Ranges for jitter factors and blur/noise sigmas; order of application
    is jitter -> blur -> noise -> clamp."""

    brightness: tuple[float, float] = (1.0, 1.0)
    contrast: tuple[float, float] = (1.0, 1.0)
    saturation: tuple[float, float] = (1.0, 1.0)
    blur_sigma: tuple[float, float] = (0.0, 0.0)
    noise_sigma: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def identity(cls) -> "AugmentConfig":
        return cls()

    def is_identity(self) -> bool:
        return self == AugmentConfig()


# simulates the spread of external single-image restorer outputs during training
TRAIN_AUGMENT = AugmentConfig(
    brightness=(0.95, 1.05),
    contrast=(0.95, 1.05),
    saturation=(0.92, 1.08),
    blur_sigma=(0.0, 0.4),
    noise_sigma=(0.0, 0.015),
)

# gentle perturbation for the oracle reference provider at inference
ORACLE_AUGMENT = AugmentConfig(
    brightness=(0.97, 1.03),
    contrast=(0.97, 1.03),
    noise_sigma=(0.0, 0.01),
)


def augment_reference(image: np.ndarray, config: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    image = np.asarray(image, dtype=np.float32)
    out = image.astype(np.float64)

    b = rng.uniform(*config.brightness)
    if b != 1.0:
        out = out * b
    c = rng.uniform(*config.contrast)
    if c != 1.0:
        gray = float((out @ LUMA_WEIGHTS).mean())
        out = (out - gray) * c + gray
    s = rng.uniform(*config.saturation)
    if s != 1.0:
        luma = (out @ LUMA_WEIGHTS)[..., None]
        out = (out - luma) * s + luma
    sigma = rng.uniform(*config.blur_sigma)
    if sigma > 0.0:
        out = ndimage.gaussian_filter(out, sigma=(sigma, sigma, 0), mode="reflect")
    nsigma = rng.uniform(*config.noise_sigma)
    if nsigma > 0.0:
        out = out + rng.normal(0.0, nsigma, out.shape)

    if config.is_identity():
        return image.copy()
    return np.clip(out, 0.0, 1.0).astype(np.float32)


# ---------------------------------------------------------------------------
# keyframe selection


def max_keyframes(num_frames: int) -> int:
    """Largest count that can satisfy both the gap and ceil(T/4) bounds."""
    by_gap = 1 + (num_frames - 1) // (MIN_GAP + 1)
    return max(1, min(by_gap, math.ceil(num_frames / 4)))


def select_keyframes(
    strategy: str,
    num_frames: int,
    indices: tuple[int, ...] | None = None,
    sync_table: list[int] | None = None,
    count: int | None = None,
    rng: np.random.Generator | None = None,
) -> KeyframeSet:
    """Build a KeyframeSet; constraint violations are rejected, never repaired.

    - manual: `indices` taken as given (0-based).
    - iframe: indices from `sync_table` that fall inside the clip.
    - random: count drawn in [1, ceil(T/4)], indices rejection-sampled until
      the gap constraint holds.
    - uniform: `count` evenly spaced indices from 0 to T-1.
    """
    if num_frames < 1:
        raise KeyframeError(f"clip must have at least one frame, got {num_frames}")

    if strategy == "manual":
        if indices is None:
            raise KeyframeError("manual selection needs explicit indices")
        keys = KeyframeSet(tuple(indices), "manual")
    elif strategy == "iframe":
        if not sync_table:
            raise KeyframeError("iframe selection needs a non-empty sync sample table")
        inside = tuple(i for i in sync_table if 0 <= i < num_frames)
        if not inside:
            raise KeyframeError("sync sample table has no entries inside the clip")
        keys = KeyframeSet(inside, "iframe")
    elif strategy == "random":
        if rng is None:
            raise KeyframeError("random selection needs a generator")
        bound = math.ceil(num_frames / 4)
        n = min(int(rng.integers(1, bound + 1)), max_keyframes(num_frames))
        # uniform over gap-valid index sets via the standard gap transform;
        # same law as rejection sampling, without the doomed retries
        slack = num_frames - (n - 1) * MIN_GAP
        base = np.sort(rng.choice(slack, size=n, replace=False))
        cand = base + np.arange(n) * MIN_GAP
        keys = KeyframeSet(tuple(int(i) for i in cand), "random")
    elif strategy == "uniform":
        if not count or count < 1:
            raise KeyframeError("uniform selection needs a positive count")
        if count == 1:
            keys = KeyframeSet((0,), "uniform")
        else:
            pts = np.round(np.linspace(0, num_frames - 1, count)).astype(int)
            keys = KeyframeSet(tuple(int(i) for i in pts), "uniform")
    else:
        raise KeyframeError(f"unknown keyframe strategy {strategy!r}")

    validate_keyframes_for_clip(keys, num_frames)
    return keys

"""Pixel <-> latent transport: analytic and learned 3D causal video codecs.

Two modes share one latent geometry (L = 1 + (T-1)/f_t latent frames on an
H/f_s x W/f_s grid):

- analytic: pure space-to-depth plus temporal grouping, exactly invertible,
  used wherever bit-exact pipeline behavior matters.  Latent frame 0 packs
  frame 0 replicated across the f_t temporal sub-blocks, so channel count
  is 3 * f_s**2 * f_t for every latent frame.
- learned: the same lossless packing followed by a small causal conv
  autoencoder that bottlenecks to 16 channels; trained by `pretrain_codec`
  on pixel reconstruction MSE.

The single-frame encoder used for HR keyframes is the video encoder applied
to a length-1 clip (the causal first-frame path), so reference latents and
video latents live in the same space by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .tensor import Tensor


@dataclass
class CodecParams:
    mode: str = "analytic"  # analytic | learned
    temporal_factor: int = 4
    spatial_factor: int = 4
    latent_channels: int = 0
    hidden: int = 64
    params: dict[str, Tensor] | None = None
    # per-channel latent std from pretraining; encode divides, decode
    # multiplies, so downstream latent MSE weighs every channel equally
    latent_scale: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("analytic", "learned"):
            raise ValueError(f"unknown codec mode {self.mode!r}")
        if self.temporal_factor != 4:
            raise ValueError("temporal factor is fixed at 4")
        if self.spatial_factor not in (2, 4, 8):
            raise ValueError(f"spatial factor must be 2, 4 or 8, got {self.spatial_factor}")
        if self.latent_channels == 0:
            self.latent_channels = (
                self.packed_channels if self.mode == "analytic" else 16
            )

    @property
    def packed_channels(self) -> int:
        return 3 * self.spatial_factor**2 * self.temporal_factor


def latent_index_of(frame_t: int, f_t: int = 4) -> int:
    """Latent frame holding pixel frame `frame_t` under causal grouping."""
    if frame_t < 0:
        raise ValueError(f"frame index must be nonnegative, got {frame_t}")
    return 0 if frame_t == 0 else 1 + (frame_t - 1) // f_t


def latent_length(num_frames: int, f_t: int = 4) -> int:
    if num_frames < 1 or (num_frames - 1) % f_t:
        raise ValueError(f"clip length must satisfy (T-1) mod {f_t} == 0, got T={num_frames}")
    return 1 + (num_frames - 1) // f_t


def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    mat[0] /= np.sqrt(2.0)
    return mat


def group_dct_basis(f_t: int, f_s: int) -> np.ndarray:
    """Orthonormal 3D DCT over (frame, ki, kj) per color on packed channels.

    Packed channel layout is ((frame*3 + color)*f_s + ki)*f_s + kj; the
    basis compacts energy of smooth translating content into few channels,
    which conditions the learned bottleneck well.
    """
    dt = _dct_matrix(f_t)
    ds = _dct_matrix(f_s)
    n = 3 * f_t * f_s * f_s
    m = np.zeros((n, n))
    for fo in range(f_t):
        for c in range(3):
            for io in range(f_s):
                for jo in range(f_s):
                    row = ((fo * 3 + c) * f_s + io) * f_s + jo
                    for fi in range(f_t):
                        for ii in range(f_s):
                            for ji in range(f_s):
                                col = ((fi * 3 + c) * f_s + ii) * f_s + ji
                                m[row, col] = dt[fo, fi] * ds[io, ii] * ds[jo, ji]
    return m


def init_learned_codec(
    f_s: int = 4,
    latent_channels: int = 16,
    hidden: int = 64,
    seed: int = 0,
    dtype=np.float32,
) -> CodecParams:
    rng = np.random.default_rng(seed)
    codec = CodecParams(mode="learned", spatial_factor=f_s, latent_channels=latent_channels, hidden=hidden)
    P, C, H = codec.packed_channels, latent_channels, hidden
    p: dict[str, Tensor] = {}

    def conv(name, cout, cin, kt, kh, kw, scale=1.0):
        w = T.he_normal(rng, (cout, cin, kt, kh, kw), cin * kt * kh * kw, dtype)
        if scale != 1.0:
            w.data *= scale
        p[f"{name}.w"] = w
        p[f"{name}.b"] = T.zeros_param((cout,), dtype)

    conv("enc1", H, P, 1, 3, 3)
    conv("enc2", H, H, 2, 3, 3)
    conv("enc3", H, H, 1, 3, 3)
    conv("enc4", C, H, 1, 1, 1, scale=0.1)
    conv("enc_skip", C, P, 1, 1, 1)
    conv("dec1", H, C, 1, 3, 3)
    conv("dec2", H, H, 2, 3, 3)
    conv("dec3", H, H, 1, 3, 3)
    conv("dec4", P, H, 1, 1, 1, scale=0.1)
    conv("dec_skip", P, C, 1, 1, 1)
    codec.params = p
    return codec


_DCT_CACHE: dict[tuple[int, int, str], tuple[Tensor, Tensor]] = {}


def _dct_tensors(codec: CodecParams, dtype) -> tuple[Tensor, Tensor]:
    key = (codec.temporal_factor, codec.spatial_factor, np.dtype(dtype).name)
    if key not in _DCT_CACHE:
        m = group_dct_basis(codec.temporal_factor, codec.spatial_factor)
        n = m.shape[0]
        fwd = Tensor(m.reshape(n, n, 1, 1, 1).astype(dtype))
        inv = Tensor(m.T.reshape(n, n, 1, 1, 1).astype(dtype))
        _DCT_CACHE[key] = (fwd, inv)
    return _DCT_CACHE[key]


def _check_clip(shape, codec: CodecParams):
    t, h, w = shape[0], shape[1], shape[2]
    if (t - 1) % codec.temporal_factor:
        raise ValueError(f"clip length must satisfy (T-1) mod {codec.temporal_factor} == 0, got T={t}")
    if h % codec.spatial_factor or w % codec.spatial_factor:
        raise ValueError(
            f"frame size {h}x{w} must be divisible by the spatial factor {codec.spatial_factor}"
        )


def _pack(x: Tensor, codec: CodecParams) -> Tensor:
    return T.video_to_groups(T.space_to_depth(x, codec.spatial_factor), codec.temporal_factor)


def _unpack(z: Tensor, codec: CodecParams) -> Tensor:
    return T.depth_to_space(T.groups_to_video(z, codec.temporal_factor), codec.spatial_factor)


def encode_t(x: Tensor, codec: CodecParams) -> Tensor:
    """Differentiable encode on a (T, 3, H, W) tensor -> (L, C, H', W')."""
    if codec.mode == "analytic":
        return _pack(x, codec)
    p = codec.params
    fwd, _ = _dct_tensors(codec, x.data.dtype)
    d = T.conv3d_causal(_pack(x - 0.5, codec), fwd)
    h = T.silu(T.conv3d_causal(d, p["enc1.w"], p["enc1.b"]))
    h = T.silu(T.conv3d_causal(h, p["enc2.w"], p["enc2.b"]))
    h = T.silu(T.conv3d_causal(h, p["enc3.w"], p["enc3.b"]))
    z = T.conv3d_causal(h, p["enc4.w"], p["enc4.b"]) + T.conv3d_causal(
        d, p["enc_skip.w"], p["enc_skip.b"]
    )
    if codec.latent_scale is not None:
        z = z * Tensor((1.0 / codec.latent_scale).reshape(1, -1, 1, 1).astype(z.data.dtype))
    return z


def decode_t(z: Tensor, codec: CodecParams) -> Tensor:
    """Differentiable decode on a (L, C, H', W') tensor -> (T, 3, H, W), unclamped."""
    if z.shape[1] != codec.latent_channels:
        raise ValueError(f"latent has {z.shape[1]} channels, codec expects {codec.latent_channels}")
    if codec.mode == "analytic":
        return _unpack(z, codec)
    p = codec.params
    _, inv = _dct_tensors(codec, z.data.dtype)
    if codec.latent_scale is not None:
        z = z * Tensor(codec.latent_scale.reshape(1, -1, 1, 1).astype(z.data.dtype))
    h = T.silu(T.conv3d_causal(z, p["dec1.w"], p["dec1.b"]))
    h = T.silu(T.conv3d_causal(h, p["dec2.w"], p["dec2.b"]))
    h = T.silu(T.conv3d_causal(h, p["dec3.w"], p["dec3.b"]))
    q = T.conv3d_causal(h, p["dec4.w"], p["dec4.b"]) + T.conv3d_causal(
        z, p["dec_skip.w"], p["dec_skip.b"]
    )
    return _unpack(T.conv3d_causal(q, inv), codec) + 0.5


def to_tchw(video: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(video, dtype=np.float32).transpose(0, 3, 1, 2))


def from_tchw(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x.transpose(0, 2, 3, 1))


def _pack_np(x: np.ndarray, ft: int, fs: int) -> np.ndarray:
    """Numpy mirror of the packing ops (bit-identical, no graph overhead)."""
    t, c, h, w = x.shape
    s2d = (
        x.reshape(t, c, h // fs, fs, w // fs, fs)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(t, c * fs * fs, h // fs, w // fs)
    )
    L = 1 + (t - 1) // ft
    cs = s2d.shape[1]
    out = np.empty((L, cs * ft, h // fs, w // fs), dtype=x.dtype)
    out[0] = np.tile(s2d[0], (ft, 1, 1))
    if L > 1:
        out[1:] = s2d[1:].reshape(L - 1, ft * cs, h // fs, w // fs)
    return out


def _unpack_np(z: np.ndarray, ft: int, fs: int) -> np.ndarray:
    L, cft, hh, ww = z.shape
    cs = cft // ft
    t = 1 + (L - 1) * ft
    s2d = np.empty((t, cs, hh, ww), dtype=z.dtype)
    s2d[0] = z[0, :cs]
    if L > 1:
        s2d[1:] = z[1:].reshape((L - 1) * ft, cs, hh, ww)
    c = cs // (fs * fs)
    return (
        s2d.reshape(t, c, fs, fs, hh, ww)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(t, c, hh * fs, ww * fs)
    )


def encode(video: np.ndarray, codec: CodecParams) -> np.ndarray:
    """(T, H, W, 3) video in [0,1] -> (L, C, H', W') latent."""
    video = np.asarray(video, dtype=np.float32)
    _check_clip(video.shape, codec)
    if codec.mode == "analytic":
        return _pack_np(to_tchw(video), codec.temporal_factor, codec.spatial_factor)
    with T.no_grad():
        return encode_t(Tensor(to_tchw(video)), codec).data


def decode(latent: np.ndarray, codec: CodecParams) -> np.ndarray:
    """(L, C, H', W') latent -> (T, H, W, 3) video clamped to [0,1]."""
    latent = np.asarray(latent, dtype=np.float32)
    if latent.shape[1] != codec.latent_channels:
        raise ValueError(f"latent has {latent.shape[1]} channels, codec expects {codec.latent_channels}")
    if codec.mode == "analytic":
        x = _unpack_np(latent, codec.temporal_factor, codec.spatial_factor)
    else:
        with T.no_grad():
            x = decode_t(Tensor(latent), codec).data
    return np.clip(from_tchw(x), 0.0, 1.0)


def encode_single_frame(image: np.ndarray, codec: CodecParams) -> np.ndarray:
    """(H, W, 3) image -> one (C, H', W') latent frame via a length-1 clip."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {image.shape}")
    return encode(image[None], codec)[0]


@dataclass
class CodecTrainConfig:
    iterations: int = 2000
    lr: float = 3e-3
    lr_floor: float = 1e-5
    batch_size: int = 2
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.95)


def pretrain_codec(
    dataset: list[np.ndarray],
    config: CodecTrainConfig,
    codec: CodecParams | None = None,
) -> tuple[CodecParams, list[float]]:
    """Train the learned codec on pixel MSE of decode(encode(x)).

    Returns the codec and the per-iteration loss history.  If the loss goes
    non-finite the run aborts and the parameters from the last finite step
    are returned.
    """
    from .optim import AdamW

    if codec is None:
        codec = init_learned_codec(seed=config.seed)
    if codec.mode == "analytic":
        return codec, []
    if config.iterations == 0:
        return codec, []

    for clip in dataset:
        _check_clip(clip.shape, codec)
    clips = [to_tchw(c) for c in dataset]
    opt = AdamW(codec.params, lr=config.lr, betas=config.betas)
    history: list[float] = []
    last_good = {k: v.data.copy() for k, v in codec.params.items()}
    for it in range(config.iterations):
        opt.lr = config.lr * 0.5 * (1 + np.cos(np.pi * it / config.iterations)) + config.lr_floor
        rng = np.random.default_rng([config.seed, it])
        loss = None
        for _ in range(config.batch_size):
            x = Tensor(clips[int(rng.integers(len(clips)))])
            li = T.tmean(T.sq_diff(decode_t(encode_t(x, codec), codec), x))
            loss = li if loss is None else loss + li
        loss = loss * (1.0 / config.batch_size)
        value = loss.item()
        if not np.isfinite(value):
            for k, v in codec.params.items():
                v.data = last_good[k]
            break
        loss.backward()
        opt.step()
        opt.zero_grad()
        history.append(value)
        for k, v in codec.params.items():
            np.copyto(last_good[k], v.data)

    # calibrate per-channel latent scale on the training clips
    stats = []
    with T.no_grad():
        for clip in clips:
            z = encode_t(Tensor(clip), codec).data
            stats.append(z.transpose(1, 0, 2, 3).reshape(z.shape[1], -1))
    std = np.concatenate(stats, axis=1).std(axis=1)
    codec.latent_scale = np.maximum(std, 1e-3).astype(np.float32)
    return codec, history


def codec_to_arrays(codec: CodecParams) -> tuple[dict[str, np.ndarray], dict]:
    """Flatten for the checkpoint container."""
    meta = {
        "codec_mode": codec.mode,
        "codec_f_t": codec.temporal_factor,
        "codec_f_s": codec.spatial_factor,
        "codec_latent_channels": codec.latent_channels,
        "codec_hidden": codec.hidden,
    }
    arrays = {}
    if codec.params:
        arrays = {f"codec.{k}": v.data for k, v in codec.params.items()}
    if codec.latent_scale is not None:
        arrays["codec_latent_scale"] = codec.latent_scale
    return arrays, meta


def codec_from_arrays(arrays: dict[str, np.ndarray], meta: dict) -> CodecParams:
    codec = CodecParams(
        mode=meta["codec_mode"],
        temporal_factor=meta["codec_f_t"],
        spatial_factor=meta["codec_f_s"],
        latent_channels=meta["codec_latent_channels"],
        hidden=meta.get("codec_hidden", 48),
    )
    prefix = "codec."
    params = {
        k[len(prefix) :]: Tensor(v, requires_grad=False)
        for k, v in arrays.items()
        if k.startswith(prefix)
    }
    if "codec_latent_scale" in arrays:
        codec.latent_scale = np.asarray(arrays["codec_latent_scale"], dtype=np.float32)
    if params:
        codec.params = params
    elif codec.mode == "learned":
        raise ValueError("learned codec checkpoint is missing parameters")
    return codec

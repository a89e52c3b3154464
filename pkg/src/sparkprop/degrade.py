"""Synthetic paired-data generation: HR clip synthesis and LR degradation.

Clips are rendered by sampling a periodic pattern at coordinates shifted by
t * (dx, dy) per frame, so every frame is exactly the first frame translated
with periodic wrap.  Degradation runs blur -> bicubic downscale -> noise ->
optional blockiness -> clamp.  LR clips are bilinearly pre-upsampled back to
the HR grid before encoding so both latents share one latent grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

CLIP_KINDS = ("moving_checker", "drifting_text", "textured_blobs")


@dataclass
class DegradationConfig:
    blur_sigma: tuple[float, float] = (0.8, 2.4)
    downscale: int = 4
    noise_sigma: tuple[float, float] = (0.01, 0.03)
    blockiness: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.downscale < 1:
            raise ValueError("downscale factor must be >= 1")
        for name in ("blur_sigma", "noise_sigma"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} range must be nonnegative and ordered")


# ---------------------------------------------------------------------------
# clip synthesis


def _smooth_square(phase: np.ndarray, sharpness: float = 1.2) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(sharpness * np.sin(2.0 * np.pi * phase)))


def _checker_pattern(rng):
    period = 8.0
    c1 = rng.uniform(0.1, 0.45, 3)
    c2 = rng.uniform(0.55, 0.9, 3)

    def render(xg, yg):
        sx = _smooth_square(xg / period)
        sy = _smooth_square(yg / period)
        m = sx * sy + (1.0 - sx) * (1.0 - sy)
        return c1[None, None, :] + (c2 - c1)[None, None, :] * m[..., None]

    return render


def _canvas_pattern(canvas: np.ndarray, scale: int):
    hp, wp, _ = canvas.shape

    def render(xg, yg):
        xs = np.mod(xg * scale, wp)
        ys = np.mod(yg * scale, hp)
        x0 = np.floor(xs).astype(np.int64)
        y0 = np.floor(ys).astype(np.int64)
        fx = (xs - x0)[..., None]
        fy = (ys - y0)[..., None]
        x1 = (x0 + 1) % wp
        y1 = (y0 + 1) % hp
        p00 = canvas[y0, x0]
        p01 = canvas[y0, x1]
        p10 = canvas[y1, x0]
        p11 = canvas[y1, x1]
        return (p00 * (1 - fx) + p01 * fx) * (1 - fy) + (p10 * (1 - fx) + p11 * fx) * fy

    return render


def _text_canvas(rng, h, w, scale=4):
    hp, wp = h * scale, w * scale
    canvas = np.full((hp, wp, 3), rng.uniform(0.05, 0.2, 3), dtype=np.float64)
    ink = rng.uniform(0.7, 0.95, 3)
    # glyph-ish strokes: short horizontal/vertical bars stamped on a torus
    for _ in range(int(rng.integers(14, 24))):
        y = int(rng.integers(0, hp))
        x = int(rng.integers(0, wp))
        if rng.random() < 0.5:
            length, thick = int(rng.integers(2, 8)) * scale, max(scale // 2, 1)
        else:
            thick, length = max(scale // 2, 1), int(rng.integers(2, 8)) * scale
        ys = (np.arange(y, y + thick if length != thick else y + length)) % hp
        xs = (np.arange(x, x + length if length != thick else x + thick)) % wp
        canvas[np.ix_(ys, xs)] = ink
    canvas = ndimage.gaussian_filter(canvas, sigma=(scale * 0.4, scale * 0.4, 0), mode="wrap")
    return canvas


def _blob_canvas(rng, h, w, scale=4):
    hp, wp = h * scale, w * scale
    canvas = rng.normal(0.0, 1.0, (hp, wp, 3))
    canvas = ndimage.gaussian_filter(canvas, sigma=(scale * 1.5, scale * 1.5, 0), mode="wrap")
    canvas += 0.08 * ndimage.gaussian_filter(
        rng.normal(0.0, 1.0, (hp, wp, 3)), sigma=(scale * 1.4, scale * 1.4, 0), mode="wrap"
    )
    lo, hi = canvas.min(), canvas.max()
    return 0.08 + 0.84 * (canvas - lo) / max(hi - lo, 1e-9)


def synth_clip_with_motion(
    kind: str, t: int, h: int, w: int, rng: np.random.Generator
) -> tuple[np.ndarray, tuple[float, float]]:
    """HR clip plus its per-frame translation velocity (dx, dy)."""
    if kind not in CLIP_KINDS:
        raise ValueError(f"unknown clip kind {kind!r}; choose from {CLIP_KINDS}")
    if t < 1 or (t - 1) % 4:
        raise ValueError(f"clip length must satisfy (T-1) mod 4 == 0, got T={t}")

    speeds = np.array([0.5, 0.75, 1.0])
    dx = float(rng.choice(speeds) * rng.choice([-1.0, 1.0]))
    dy = float(rng.choice(np.concatenate([[0.0], speeds])) * rng.choice([-1.0, 1.0]))

    if kind == "moving_checker":
        render = _checker_pattern(rng)
    elif kind == "drifting_text":
        render = _canvas_pattern(_text_canvas(rng, h, w), 4)
    else:
        render = _canvas_pattern(_blob_canvas(rng, h, w), 4)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    frames = np.empty((t, h, w, 3), dtype=np.float32)
    for i in range(t):
        xg = np.mod(xs - i * dx, w)
        yg = np.mod(ys - i * dy, h)
        frames[i] = np.clip(render(xg, yg), 0.0, 1.0).astype(np.float32)
    return frames, (dx, dy)


def synth_clip(kind: str, t: int, h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic HR ground-truth clip: frame i is frame 0 translated by
    i * (dx, dy) with periodic wrap, |velocity| >= 0.5 px/frame."""
    return synth_clip_with_motion(kind, t, h, w, rng)[0]


# ---------------------------------------------------------------------------
# degradation


_CUBIC_A = -0.5  # Catmull-Rom


def _cubic_kernel(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    a = _CUBIC_A
    out = np.where(
        ax <= 1,
        (a + 2) * ax**3 - (a + 3) * ax**2 + 1,
        np.where(ax < 2, a * ax**3 - 5 * a * ax**2 + 8 * a * ax - 4 * a, 0.0),
    )
    return out


def _bicubic_axis_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic sampling matrix for pixel-center-aligned resize."""
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    mat = np.zeros((n_out, n_in))
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, n_in - 1)
        wgt = _cubic_kernel(src - (base + k))
        np.add.at(mat, (np.arange(n_out), idx), wgt)
    mat /= mat.sum(axis=1, keepdims=True)
    return mat


def bicubic_resize(frames: np.ndarray, h_out: int, w_out: int) -> np.ndarray:
    """Per-frame separable Catmull-Rom resize of (T, H, W, C)."""
    t, h, w, c = frames.shape
    my = _bicubic_axis_matrix(h, h_out)
    mx = _bicubic_axis_matrix(w, w_out)
    out = np.einsum("oh,thwc->towc", my, frames.astype(np.float64))
    out = np.einsum("pw,towc->topc", mx, out)
    return out.astype(np.float32)


def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    mat[0] /= np.sqrt(2.0)
    return mat


def _blockiness(frames: np.ndarray, strength: float) -> np.ndarray:
    """Quantize 8x8 DCT coefficients, a crude compression artifact."""
    t, h, w, c = frames.shape
    bs = 8
    if h % bs or w % bs:
        return frames
    d = _dct_matrix(bs)
    q = strength
    x = frames.reshape(t, h // bs, bs, w // bs, bs, c).transpose(0, 1, 3, 5, 2, 4)
    coeff = d @ x @ d.T
    coeff = np.round(coeff / q) * q
    x = d.T @ coeff @ d
    return x.transpose(0, 1, 4, 2, 5, 3).reshape(t, h, w, c)


def degrade_video(hr: np.ndarray, cfg: DegradationConfig, rng: np.random.Generator) -> np.ndarray:
    """HR (T, H, W, 3) -> LR (T, H/k, W/k, 3), deterministic under the rng."""
    hr = np.asarray(hr, dtype=np.float32)
    t, h, w, _ = hr.shape
    k = cfg.downscale
    if h % k or w % k:
        raise ValueError(f"frame size {h}x{w} not divisible by downscale factor {k}")
    sigma = float(rng.uniform(*cfg.blur_sigma))
    out = hr.astype(np.float64)
    if sigma > 0:
        out = ndimage.gaussian_filter(out, sigma=(0, sigma, sigma, 0), mode="reflect")
    if k > 1:
        out = bicubic_resize(out, h // k, w // k).astype(np.float64)
    nsigma = float(rng.uniform(*cfg.noise_sigma))
    if nsigma > 0:
        out = out + rng.normal(0.0, nsigma, out.shape)
    if cfg.blockiness > 0:
        out = _blockiness(out, cfg.blockiness)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def upsample_to(lr: np.ndarray, h: int, w: int) -> np.ndarray:
    """Corner-anchored (align-corners) bilinear per-frame upsample."""
    lr = np.asarray(lr, dtype=np.float32)
    t, hi, wi, c = lr.shape
    if (hi, wi) == (h, w):
        return lr.copy()

    def axis_coords(n_in, n_out):
        if n_in == 1:
            return np.zeros(n_out), np.zeros(n_out, dtype=np.int64)
        src = np.arange(n_out) * (n_in - 1) / (n_out - 1)
        base = np.minimum(np.floor(src).astype(np.int64), n_in - 2)
        return src - base, base

    fy, y0 = axis_coords(hi, h)
    fx, x0 = axis_coords(wi, w)
    a = lr[:, y0][:, :, x0]
    b = lr[:, y0][:, :, x0 + 1] if wi > 1 else a
    cpix = lr[:, y0 + 1][:, :, x0] if hi > 1 else a
    dpix = lr[:, y0 + 1][:, :, x0 + 1] if (hi > 1 and wi > 1) else a
    fxg = fx[None, None, :, None]
    fyg = fy[None, :, None, None]
    top = a * (1 - fxg) + b * fxg
    bot = cpix * (1 - fxg) + dpix * fxg
    return (top * (1 - fyg) + bot * fyg).astype(np.float32)


def make_pair(
    kind: str,
    t: int,
    h: int,
    w: int,
    cfg: DegradationConfig,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """(HR clip, LR clip pre-upsampled to the HR grid)."""
    rng = np.random.default_rng([seed, 0])
    hr = synth_clip(kind, t, h, w, rng)
    lr = degrade_video(hr, cfg, np.random.default_rng([seed, 1]))
    return hr, upsample_to(lr, h, w)


# ---------------------------------------------------------------------------
# dataset manifests


def write_dataset(
    directory: str,
    pairs: list[tuple[np.ndarray, np.ndarray]],
    seeds: list[int],
    fps: tuple[int, int] = (24, 1),
):
    """Y4M pair files plus a text manifest: one 'hr=...;lr=...;seed=...' line each."""
    import os

    from .video_io import write_y4m

    os.makedirs(directory, exist_ok=True)
    lines = []
    for i, ((hr, lr), seed) in enumerate(zip(pairs, seeds)):
        hr_name = f"clip{i:04d}_hr.y4m"
        lr_name = f"clip{i:04d}_lr.y4m"
        with open(os.path.join(directory, hr_name), "wb") as f:
            f.write(write_y4m(hr, fps))
        with open(os.path.join(directory, lr_name), "wb") as f:
            f.write(write_y4m(lr, fps))
        lines.append(f"hr={hr_name};lr={lr_name};seed={seed}")
    with open(os.path.join(directory, "manifest.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(directory: str) -> list[tuple[np.ndarray, np.ndarray]]:
    import os

    from .video_io import read_y4m

    pairs = []
    with open(os.path.join(directory, "manifest.txt")) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            fields = dict(part.split("=", 1) for part in line.split(";"))
            hr, _ = read_y4m(open(os.path.join(directory, fields["hr"]), "rb").read())
            lr, _ = read_y4m(open(os.path.join(directory, fields["lr"]), "rb").read())
            pairs.append((hr, lr))
    return pairs

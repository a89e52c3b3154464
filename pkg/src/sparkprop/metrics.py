"""Full-reference quality metrics, temporal stability, X-T slices, reports.

SSIM uses non-overlapping windows (window=8, k1=0.01, k2=0.03, L=1) so a
brute-force per-window oracle can replicate it exactly; the constant choice
is stamped into the report header.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .video_io import LUMA_WEIGHTS, write_pgm

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03

REPORT_HEADER = (
    f"# psnr: peak 1.0, capped at {PSNR_CAP_DB:.0f} dB; "
    f"ssim: window={SSIM_WINDOW} non-overlapping, k1={SSIM_K1}, k2={SSIM_K2}, L=1; "
    "flicker: mean L1 of temporal-difference error"
)


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) for unit dynamic range, capped at 99 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def luma(frames: np.ndarray) -> np.ndarray:
    """(..., 3) RGB -> (...) BT.601 luma."""
    return np.asarray(frames, dtype=np.float64) @ LUMA_WEIGHTS


def ssim(a: np.ndarray, b: np.ndarray, window: int = SSIM_WINDOW) -> float:
    """Mean local SSIM over non-overlapping windows of every frame.

    Operates on luma; remainder pixels beyond the window grid are dropped.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    if a.ndim == 3:
        a, b = a[None], b[None]
    t, h, w, _ = a.shape
    if h < window or w < window:
        raise ValueError(f"frames {h}x{w} smaller than the {window}px SSIM window")
    ya, yb = luma(a), luma(b)
    nh, nw = h // window, w // window
    ya = ya[:, : nh * window, : nw * window].reshape(t, nh, window, nw, window)
    yb = yb[:, : nh * window, : nw * window].reshape(t, nh, window, nw, window)
    ya = ya.transpose(0, 1, 3, 2, 4).reshape(t, nh * nw, window * window)
    yb = yb.transpose(0, 1, 3, 2, 4).reshape(t, nh * nw, window * window)

    mu_a = ya.mean(axis=2)
    mu_b = yb.mean(axis=2)
    var_a = ya.var(axis=2)
    var_b = yb.var(axis=2)
    cov = ((ya - mu_a[..., None]) * (yb - mu_b[..., None])).mean(axis=2)
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
    return float(s.mean())


def flicker_index(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean L1 deviation of temporal differences from the ground truth's."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    _check_pair(pred, gt)
    if pred.shape[0] < 2:
        raise ValueError("flicker index needs at least two frames")
    dp = np.diff(pred, axis=0)
    dg = np.diff(gt, axis=0)
    return float(np.abs(dp - dg).mean())


def xt_slice(video: np.ndarray, row: int) -> np.ndarray:
    """Stack scanline `row` of every frame: (T, W) luma image, time downward."""
    video = np.asarray(video)
    t, h, w, _ = video.shape
    if not 0 <= row < h:
        raise ValueError(f"row {row} outside frame height {h}")
    return luma(video[:, row]).astype(np.float32)


def xt_slice_pgm(video: np.ndarray, row: int) -> bytes:
    return write_pgm(np.clip(xt_slice(video, row), 0.0, 1.0))


def xt_slope(slice_img: np.ndarray) -> float:
    """Mean per-row shift (px/frame) of an X-T slice via circular correlation."""
    s = np.asarray(slice_img, dtype=np.float64)
    t, w = s.shape
    shifts = []
    for i in range(1, t):
        a = s[i - 1] - s[i - 1].mean()
        b = s[i] - s[i].mean()
        corr = np.fft.irfft(np.fft.rfft(b) * np.conj(np.fft.rfft(a)), n=w)
        k = int(np.argmax(corr))
        # parabolic refinement around the integer peak
        c0, c1, c2 = corr[(k - 1) % w], corr[k], corr[(k + 1) % w]
        denom = c0 - 2 * c1 + c2
        frac = 0.5 * (c0 - c2) / denom if denom != 0 else 0.0
        shift = k + frac
        if shift > w / 2:
            shift -= w
        shifts.append(shift)
    return float(np.mean(shifts))


@dataclass
class ClipMetrics:
    clip: str
    psnr_db: float
    ssim: float
    flicker: float


@dataclass
class EvalReport:
    rows: list[ClipMetrics]

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r.psnr_db for r in self.rows]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r.ssim for r in self.rows]))

    @property
    def mean_flicker(self) -> float:
        return float(np.mean([r.flicker for r in self.rows]))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(REPORT_HEADER + "\n")
        out.write("clip,psnr_db,ssim,flicker\n")
        for r in self.rows:
            out.write(f"{r.clip},{r.psnr_db:.6f},{r.ssim:.6f},{r.flicker:.6f}\n")
        out.write(f"aggregate,{self.mean_psnr:.6f},{self.mean_ssim:.6f},{self.mean_flicker:.6f}\n")
        return out.getvalue()


def eval_report(pairs: list[tuple[str, np.ndarray, np.ndarray]]) -> EvalReport:
    """Per-clip (name, pred, gt) metrics; deterministic, composable with
    the single-metric functions."""
    rows = []
    for name, pred, gt in pairs:
        _check_pair(np.asarray(pred), np.asarray(gt))
        rows.append(ClipMetrics(name, psnr(pred, gt), ssim(pred, gt), flicker_index(pred, gt)))
    return EvalReport(rows)

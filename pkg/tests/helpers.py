"""Shared fixture builders: hand-assembled ISO BMFF boxes and tiny videos."""

import struct

import numpy as np


def box(fourcc: bytes, payload: bytes = b"") -> bytes:
    return struct.pack(">I", 8 + len(payload)) + fourcc + payload


def fullbox_payload(body: bytes, version: int = 0, flags: int = 0) -> bytes:
    return struct.pack(">I", (version << 24) | flags) + body


def stss_box(sample_numbers, declared_count=None) -> bytes:
    count = len(sample_numbers) if declared_count is None else declared_count
    body = struct.pack(">I", count) + b"".join(struct.pack(">I", n) for n in sample_numbers)
    return box(b"stss", fullbox_payload(body))


def stsz_box(sample_count: int) -> bytes:
    return box(b"stsz", fullbox_payload(struct.pack(">II", 0, sample_count)))


def hdlr_box(handler: bytes) -> bytes:
    body = struct.pack(">I", 0) + handler + b"\x00" * 12 + b"\x00"
    return box(b"hdlr", fullbox_payload(body))


def minimal_mp4(stbl_children: bytes, handler: bytes = b"vide", extra_traks: bytes = b"") -> bytes:
    stbl = box(b"stbl", stbl_children)
    minf = box(b"minf", stbl)
    mdia = box(b"mdia", hdlr_box(handler) + minf)
    trak = box(b"trak", mdia)
    moov = box(b"moov", extra_traks + trak)
    ftyp = box(b"ftyp", b"isom" + struct.pack(">I", 0) + b"isomiso2")
    return ftyp + moov


def mp4_with_sync_samples(sample_numbers) -> bytes:
    """MP4 whose first video track lists `sample_numbers` (1-based) in stss."""
    return minimal_mp4(stss_box(sample_numbers) + stsz_box(max(sample_numbers) if sample_numbers else 0))


def mp4_without_stss(sample_count: int) -> bytes:
    return minimal_mp4(stsz_box(sample_count))


def checker_video(t=3, h=8, w=8, period=4, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    base = (((yy // period) + (xx // period)) % 2).astype(np.float32)
    frames = []
    for i in range(t):
        f = np.roll(base, i, axis=1)
        rgbs = np.stack([f * 0.8 + 0.1, f * 0.5 + 0.2, (1 - f) * 0.6 + 0.2], axis=-1)
        frames.append(rgbs + rng.uniform(-0.02, 0.02, rgbs.shape))
    return np.clip(np.stack(frames), 0.0, 1.0).astype(np.float32)

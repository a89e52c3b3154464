"""Video and image container I/O: Y4M clips, PPM/PGM frames, MP4 sync samples.

Videos are (T, H, W, 3) float arrays in [0, 1].  All YUV<->RGB conversion
uses BT.601 full range, frame indices are 0-based everywhere internally,
and every parser is a pure function over bytes.
"""

from __future__ import annotations

import struct

import numpy as np

# BT.601 full-range luma weights, shared with metrics and augmentation.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class VideoFormatError(ValueError):
    """Malformed Y4M/PPM/PGM input; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class Mp4ParseError(ValueError):
    """Malformed ISO BMFF input; carries the box path and byte offset."""

    def __init__(self, message: str, path: str = "", offset: int = 0):
        self.path = path
        self.offset = offset
        super().__init__(f"{message} (box path {path or '<top>'}, at byte {offset})")


def ensure_video(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float32)
    if v.ndim != 4 or v.shape[3] != 3 or v.shape[0] < 1:
        raise ValueError(f"expected video shaped (T, H, W, 3), got {v.shape}")
    return v


# ---------------------------------------------------------------------------
# color conversion


def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    """[0,1] RGB -> (Y in [0,1], Cb/Cr in [-0.5, 0.5])."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 0.5 * (b - y) / 0.886
    cr = 0.5 * (r - y) / 0.701
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(ycc: np.ndarray) -> np.ndarray:
    y, cb, cr = ycc[..., 0], ycc[..., 1], ycc[..., 2]
    r = y + 1.402 * cr
    b = y + 1.772 * cb
    g = (y - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([r, g, b], axis=-1)


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.clip(np.round(x * 255.0), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Y4M


def write_y4m(video: np.ndarray, fps: tuple[int, int] = (24, 1)) -> bytes:
    """Emit YUV4MPEG2, C444, 8-bit, BT.601 full range."""
    video = ensure_video(video)
    t, h, w, _ = video.shape
    out = bytearray()
    out += f"YUV4MPEG2 W{w} H{h} F{fps[0]}:{fps[1]} Ip A1:1 C444\n".encode()
    ycc = rgb_to_ycbcr(video.astype(np.float64))
    yb = _quantize(ycc[..., 0])
    cbb = _quantize(ycc[..., 1] + 128.0 / 255.0)
    crb = _quantize(ycc[..., 2] + 128.0 / 255.0)
    for i in range(t):
        out += b"FRAME\n"
        out += yb[i].tobytes() + cbb[i].tobytes() + crb[i].tobytes()
    return bytes(out)


def read_y4m(data: bytes) -> tuple[np.ndarray, tuple[int, int]]:
    """Parse Y4M (C444 or C420 family) to a clamped RGB video plus (fps_num, fps_den)."""
    if not data.startswith(b"YUV4MPEG2"):
        raise VideoFormatError("not a YUV4MPEG2 stream", 0)
    nl = data.find(b"\n")
    if nl < 0:
        raise VideoFormatError("unterminated stream header", len(data))
    header = data[:nl].decode("ascii", errors="replace")
    width = height = None
    fps = (25, 1)
    colorspace = None
    for tok in header.split()[1:]:
        if tok[0] == "W":
            width = int(tok[1:])
        elif tok[0] == "H":
            height = int(tok[1:])
        elif tok[0] == "F":
            num, den = tok[1:].split(":")
            fps = (int(num), int(den))
        elif tok[0] == "C":
            colorspace = tok[1:]
    if not width or not height:
        raise VideoFormatError("header missing W or H", 0)
    if colorspace is None:
        raise VideoFormatError("header missing colorspace tag", 0)
    if colorspace == "444":
        cw, ch = width, height
    elif colorspace.startswith("420"):
        if width % 2 or height % 2:
            raise VideoFormatError("C420 stream with odd dimensions", 0)
        cw, ch = width // 2, height // 2
    else:
        raise VideoFormatError(f"unsupported colorspace C{colorspace}", 0)

    frame_bytes = width * height + 2 * cw * ch
    frames = []
    pos = nl + 1
    while pos < len(data):
        if not data.startswith(b"FRAME", pos):
            raise VideoFormatError("expected FRAME marker", pos)
        fnl = data.find(b"\n", pos)
        if fnl < 0:
            raise VideoFormatError("unterminated FRAME header", pos)
        start = fnl + 1
        end = start + frame_bytes
        if end > len(data):
            raise VideoFormatError("truncated frame payload", start)
        raw = np.frombuffer(data[start:end], dtype=np.uint8)
        y = raw[: width * height].reshape(height, width).astype(np.float64) / 255.0
        cb = raw[width * height : width * height + cw * ch].reshape(ch, cw)
        cr = raw[width * height + cw * ch :].reshape(ch, cw)
        cb = (cb.astype(np.float64) - 128.0) / 255.0
        cr = (cr.astype(np.float64) - 128.0) / 255.0
        if (cw, ch) != (width, height):
            cb = cb.repeat(2, axis=0).repeat(2, axis=1)
            cr = cr.repeat(2, axis=0).repeat(2, axis=1)
        rgb = ycbcr_to_rgb(np.stack([y, cb, cr], axis=-1))
        frames.append(np.clip(rgb, 0.0, 1.0).astype(np.float32))
        pos = end
    if not frames:
        raise VideoFormatError("empty stream: no FRAME markers", pos)
    return np.stack(frames), fps


# ---------------------------------------------------------------------------
# PPM / PGM (binary, maxval 255)


def write_ppm(image: np.ndarray) -> bytes:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {image.shape}")
    h, w, _ = image.shape
    return f"P6\n{w} {h}\n255\n".encode() + _quantize(image.astype(np.float64)).tobytes()


def write_pgm(image: np.ndarray) -> bytes:
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 2:
        raise ValueError(f"expected (H, W) grayscale image, got {image.shape}")
    h, w = image.shape
    return f"P5\n{w} {h}\n255\n".encode() + _quantize(image.astype(np.float64)).tobytes()


def _parse_pnm_header(data: bytes, magic: bytes) -> tuple[int, int, int]:
    if data[:2] != magic:
        raise VideoFormatError(f"bad magic {data[:2]!r}, expected {magic!r}", 0)
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise VideoFormatError("unterminated comment", len(data))
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise VideoFormatError("truncated header", pos)
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise VideoFormatError(f"unsupported maxval {maxval}", 0)
    return w, h, pos


def read_ppm(data: bytes) -> np.ndarray:
    w, h, pos = _parse_pnm_header(data, b"P6")
    need = w * h * 3
    if len(data) - pos < need:
        raise VideoFormatError("truncated raster", pos)
    raw = np.frombuffer(data[pos : pos + need], dtype=np.uint8)
    return (raw.reshape(h, w, 3).astype(np.float32)) / 255.0


def read_pgm(data: bytes) -> np.ndarray:
    w, h, pos = _parse_pnm_header(data, b"P5")
    need = w * h
    if len(data) - pos < need:
        raise VideoFormatError("truncated raster", pos)
    raw = np.frombuffer(data[pos : pos + need], dtype=np.uint8)
    return (raw.reshape(h, w).astype(np.float32)) / 255.0


# ---------------------------------------------------------------------------
# MP4 sync samples (stss)

_CONTAINERS = {b"moov", b"trak", b"mdia", b"minf", b"stbl"}
_MAX_DEPTH = 16


def _iter_boxes(data: bytes, start: int, end: int, path: str, depth: int):
    if depth > _MAX_DEPTH:
        raise Mp4ParseError("box nesting overflow", path, start)
    pos = start
    while pos < end:
        if end - pos < 8:
            raise Mp4ParseError("truncated box header", path, pos)
        (size,) = struct.unpack_from(">I", data, pos)
        fourcc = data[pos + 4 : pos + 8]
        body = pos + 8
        if size == 1:
            if end - pos < 16:
                raise Mp4ParseError("truncated largesize header", path, pos)
            (size,) = struct.unpack_from(">Q", data, pos + 8)
            body = pos + 16
        elif size == 0:
            size = end - pos
        if size < body - pos or pos + size > end:
            raise Mp4ParseError(f"malformed box length {size} for {fourcc!r}", path, pos)
        yield fourcc, body, pos + size, pos
        pos += size


def _find_boxes(data: bytes, start: int, end: int, fourcc: bytes, path: str, depth: int):
    for cc, body, bend, hdr in _iter_boxes(data, start, end, path, depth):
        if cc == fourcc:
            yield body, bend, hdr


def _fullbox(data: bytes, body: int, end: int, path: str) -> int:
    if end - body < 4:
        raise Mp4ParseError("truncated full box", path, body)
    return body + 4


def _sample_count_from_stbl(data: bytes, start: int, end: int, path: str) -> int:
    for body, bend, hdr in _find_boxes(data, start, end, b"stsz", path, 7):
        p = _fullbox(data, body, bend, path + "/stsz")
        if bend - p < 8:
            raise Mp4ParseError("truncated stsz", path + "/stsz", p)
        _, count = struct.unpack_from(">II", data, p)
        return count
    for body, bend, hdr in _find_boxes(data, start, end, b"stts", path, 7):
        p = _fullbox(data, body, bend, path + "/stts")
        if bend - p < 4:
            raise Mp4ParseError("truncated stts", path + "/stts", p)
        (entries,) = struct.unpack_from(">I", data, p)
        p += 4
        if bend - p < entries * 8:
            raise Mp4ParseError("stts entry count disagrees with payload size", path + "/stts", p)
        total = 0
        for i in range(entries):
            cnt, _ = struct.unpack_from(">II", data, p + i * 8)
            total += cnt
        return total
    raise Mp4ParseError("no stsz or stts to count samples", path, start)


def _is_video_trak(data: bytes, start: int, end: int, path: str) -> bool:
    for mbody, mend, _ in _find_boxes(data, start, end, b"mdia", path, 4):
        for hbody, hend, _ in _find_boxes(data, mbody, mend, b"hdlr", path + "/mdia", 5):
            p = _fullbox(data, hbody, hend, path + "/mdia/hdlr")
            if hend - p < 8:
                raise Mp4ParseError("truncated hdlr", path + "/mdia/hdlr", p)
            return data[p + 4 : p + 8] == b"vide"
    return False


def parse_mp4_sync_samples(data: bytes) -> list[int]:
    """0-based frame indices of sync samples from the first video track.

    The traversal is moov -> trak -> mdia -> minf -> stbl -> stss; stss
    entries are 1-based sample numbers.  A track without stss means every
    sample is a sync sample.
    """
    have_ftyp = False
    moov = None
    for cc, body, bend, hdr in _iter_boxes(data, 0, len(data), "", 1):
        if cc == b"ftyp":
            have_ftyp = True
        elif cc == b"moov" and moov is None:
            moov = (body, bend)
    if not have_ftyp:
        raise Mp4ParseError("missing ftyp box", "", 0)
    if moov is None:
        raise Mp4ParseError("missing moov box", "", 0)

    for tbody, tend, thdr in _find_boxes(data, moov[0], moov[1], b"trak", "moov", 2):
        path = "moov/trak"
        if not _is_video_trak(data, tbody, tend, path):
            continue
        for mbody, mend, _ in _find_boxes(data, tbody, tend, b"mdia", path, 3):
            for fbody, fend, _ in _find_boxes(data, mbody, mend, b"minf", path + "/mdia", 4):
                for sbody, send, _ in _find_boxes(data, fbody, fend, b"stbl", path + "/mdia/minf", 5):
                    spath = path + "/mdia/minf/stbl"
                    for xbody, xend, xhdr in _find_boxes(data, sbody, send, b"stss", spath, 6):
                        p = _fullbox(data, xbody, xend, spath + "/stss")
                        if xend - p < 4:
                            raise Mp4ParseError("truncated stss", spath + "/stss", p)
                        (count,) = struct.unpack_from(">I", data, p)
                        p += 4
                        if xend - p != count * 4:
                            raise Mp4ParseError(
                                f"stss declares {count} entries but payload holds {(xend - p) // 4}",
                                spath + "/stss",
                                p,
                            )
                        entries = list(struct.unpack_from(f">{count}I", data, p)) if count else []
                        out = []
                        prev = 0
                        for n in entries:
                            if n < 1 or n <= prev:
                                raise Mp4ParseError(
                                    f"stss sample numbers not strictly increasing at {n}", spath + "/stss", p
                                )
                            prev = n
                            out.append(n - 1)
                        return out
                    count = _sample_count_from_stbl(data, sbody, send, spath)
                    return list(range(count))
                raise Mp4ParseError("missing stbl box", path + "/mdia/minf", fbody)
            raise Mp4ParseError("missing minf box", path + "/mdia", mbody)
        raise Mp4ParseError("missing mdia box", path, tbody)
    raise Mp4ParseError("no video track found", "moov", moov[0])

"""Checkpoint container: named tensors plus a JSON metadata header.

Layout (all integers little-endian):

    magic "SPKV" | u32 version | u32 meta_len | meta JSON (utf-8)
    | u32 entry_count | entries | raw tensor payloads

    entry: u16 name_len | name utf-8 | u8 dtype_code | u8 ndim
           | u32 dims[ndim] | u64 payload offset

Payload offsets are relative to the end of the manifest.  dtype codes:
0 = float32, 1 = float64, 2 = int64.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"SPKV"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODE_FOR_KIND = {("f", 4): 0, ("f", 8): 1, ("i", 8): 2}


class CheckpointError(ValueError):
    pass


def dump_checkpoint(tensors: dict[str, np.ndarray], metadata: dict) -> bytes:
    meta = json.dumps(metadata, sort_keys=True).encode("utf-8")
    manifest = bytearray()
    payload = bytearray()
    manifest += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        code = _CODE_FOR_KIND.get((arr.dtype.kind, arr.dtype.itemsize))
        if code is None:
            raise CheckpointError(f"unsupported dtype {arr.dtype} for {name!r}")
        nb = name.encode("utf-8")
        manifest += struct.pack("<H", len(nb)) + nb
        manifest += struct.pack("<BB", code, arr.ndim)
        manifest += struct.pack(f"<{arr.ndim}I", *arr.shape)
        manifest += struct.pack("<Q", len(payload))
        payload += arr.astype(_DTYPE_CODES[code], copy=False).tobytes()
    head = MAGIC + struct.pack("<II", VERSION, len(meta)) + meta
    return bytes(head) + bytes(manifest) + bytes(payload)


def parse_checkpoint(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    pos = 4
    version, meta_len = struct.unpack_from("<II", data, pos)
    pos += 8
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    metadata = json.loads(data[pos : pos + meta_len].decode("utf-8"))
    pos += meta_len
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        code, ndim = struct.unpack_from("<BB", data, pos)
        pos += 2
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        (offset,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        if code not in _DTYPE_CODES:
            raise CheckpointError(f"unknown dtype code {code} for {name!r}")
        entries.append((name, code, shape, offset))
    base = pos
    tensors = {}
    for name, code, shape, offset in entries:
        dt = _DTYPE_CODES[code]
        n = int(np.prod(shape)) if shape else 1
        start = base + offset
        end = start + n * dt.itemsize
        if end > len(data):
            raise CheckpointError(f"truncated payload for {name!r}")
        tensors[name] = np.frombuffer(data[start:end], dtype=dt).reshape(shape).copy()
    return tensors, metadata


def save_checkpoint(path: str, tensors: dict[str, np.ndarray], metadata: dict):
    """Write atomically (temp file + rename)."""
    blob = dump_checkpoint(tensors, metadata)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        return parse_checkpoint(f.read())

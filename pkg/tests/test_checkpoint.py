import numpy as np
import pytest

from sparkprop.checkpoint import (
    MAGIC,
    CheckpointError,
    dump_checkpoint,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)


def test_roundtrip_preserves_values_and_metadata(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.weight": rng.standard_normal((3, 4)).astype(np.float32),
        "a.bias": rng.standard_normal(4),
        "counts": np.arange(5, dtype=np.int64),
        "scalar": np.float32(2.5),
    }
    meta = {"stage": 1, "iteration": 42, "seed": 7, "config_hash": "abc"}
    path = tmp_path / "model.spkv"
    save_checkpoint(str(path), tensors, meta)
    loaded, meta2 = load_checkpoint(str(path))
    assert meta2 == meta
    assert set(loaded) == set(tensors)
    for k in tensors:
        np.testing.assert_array_equal(loaded[k], np.asarray(tensors[k]))
        assert loaded[k].dtype == np.asarray(tensors[k]).dtype


def test_magic_bytes_lead_the_file(tmp_path):
    blob = dump_checkpoint({"x": np.zeros(2, dtype=np.float32)}, {})
    assert blob[:4] == MAGIC == b"SPKV"


def test_bad_magic_rejected():
    with pytest.raises(CheckpointError, match="magic"):
        parse_checkpoint(b"NOPE" + b"\x00" * 64)


def test_truncated_payload_rejected():
    blob = dump_checkpoint({"x": np.ones(8, dtype=np.float64)}, {})
    with pytest.raises(CheckpointError, match="truncated"):
        parse_checkpoint(blob[:-8])


def test_unsupported_dtype_rejected():
    with pytest.raises(CheckpointError, match="dtype"):
        dump_checkpoint({"x": np.zeros(2, dtype=np.complex64)}, {})


def test_payload_is_little_endian_f32():
    blob = dump_checkpoint({"x": np.array([1.0], dtype=np.float32)}, {})
    assert blob.endswith(np.array([1.0], dtype="<f4").tobytes())


def test_save_is_atomic_no_temp_left(tmp_path):
    path = tmp_path / "c.spkv"
    save_checkpoint(str(path), {"x": np.zeros(3, dtype=np.float32)}, {"k": 1})
    assert [p.name for p in tmp_path.iterdir()] == ["c.spkv"]

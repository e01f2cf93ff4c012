import numpy as np
import pytest

from radiodiff.checkpoint import load_checkpoint, save_checkpoint
from radiodiff.errors import FormatError


def _arrays(rng):
    return {
        "w.conv": rng.normal(size=(4, 3, 3, 3)).astype(np.float32),
        "b": rng.normal(size=(4,)).astype(np.float32),
        "steps": np.array([1000], dtype=np.int64),
        "loss": rng.normal(size=(10,)),
    }


def test_roundtrip_preserves_meta_and_arrays(tmp_path, rng):
    path = str(tmp_path / "m.ckpt")
    meta = {"kind": "test", "cfg": {"width": 32, "lr": 1e-4}, "note": "x"}
    arrays = _arrays(rng)
    save_checkpoint(path, meta, arrays)
    meta2, arrays2 = load_checkpoint(path)
    assert meta2 == meta
    assert set(arrays2) == set(arrays)
    for name in arrays:
        assert arrays2[name].dtype == arrays[name].dtype or \
            arrays[name].dtype == np.float64
        assert np.array_equal(arrays2[name],
                              arrays[name].astype(arrays2[name].dtype))


def test_load_save_load_byte_identical(tmp_path, rng):
    a, b = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    save_checkpoint(a, {"z": 1, "a": [1, 2]}, _arrays(rng))
    meta, arrays = load_checkpoint(a)
    save_checkpoint(b, meta, arrays)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_meta_key_order_does_not_change_bytes(tmp_path, rng):
    a, b = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    arrays = _arrays(rng)
    save_checkpoint(a, {"x": 1, "y": 2}, arrays)
    save_checkpoint(b, {"y": 2, "x": 1}, arrays)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_bad_magic_rejected_at_offset_zero(tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(str(path), {}, _arrays(rng))
    blob = path.read_bytes()
    path.write_bytes(b"ZZZZ" + blob[4:])
    with pytest.raises(FormatError) as err:
        load_checkpoint(str(path))
    assert err.value.offset == 0


def test_bad_version_rejected(tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(str(path), {}, _arrays(rng))
    blob = bytearray(path.read_bytes())
    blob[4] = 42
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_checkpoint(str(path))


def test_truncated_array_payload_rejected(tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(str(path), {"k": 1}, _arrays(rng))
    blob = path.read_bytes()
    path.write_bytes(blob[:-3])
    with pytest.raises(FormatError):
        load_checkpoint(str(path))


def test_shapes_and_scalar_arrays(tmp_path):
    path = str(tmp_path / "m.ckpt")
    arrays = {"scalar": np.array(3.5), "empty": np.zeros((0, 4), np.float32)}
    save_checkpoint(path, {}, arrays)
    _, back = load_checkpoint(path)
    assert back["scalar"].shape == ()
    assert float(back["scalar"]) == 3.5
    assert back["empty"].shape == (0, 4)

"""Deterministic checkpoint container: JSON metadata plus named arrays.

Serialization is canonical (sorted keys, sorted array names, fixed-width
little-endian headers), so load -> save -> load reproduces the file byte
for byte.  That property anchors the reproducibility checks, which is why
this is a purpose-built container rather than a pickle.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .errors import FormatError

MAGIC = b"RDCK"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<i8", 2: "<f8"}
_TAGS = {np.dtype("float32"): 0, np.dtype("int64"): 1, np.dtype("float64"): 2}

__all__ = ["save_checkpoint", "load_checkpoint"]


def _canonical_meta(meta):
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()


def save_checkpoint(path, meta, arrays):
    """Write metadata and a name->array mapping; names are sorted on disk."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<B", VERSION)
    meta_bytes = _canonical_meta(meta)
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    names = sorted(arrays)
    blob += struct.pack("<I", len(names))
    for name in names:
        # ascontiguousarray would widen 0-d arrays to 1-d; keep their shape.
        arr = np.asarray(arrays[name])
        if arr.dtype not in _TAGS:
            arr = arr.astype(np.float32)
        if arr.ndim:
            arr = np.ascontiguousarray(arr)
        tag = _TAGS[arr.dtype]
        name_bytes = name.encode()
        blob += struct.pack("<H", len(name_bytes))
        blob += name_bytes
        blob += struct.pack("<BB", tag, arr.ndim)
        for d in arr.shape:
            blob += struct.pack("<I", d)
        blob += arr.astype(_DTYPES[tag]).tobytes()
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(bytes(blob))
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    off = 0

    def take(n, what):
        nonlocal off
        if off + n > len(blob):
            raise FormatError(f"truncated {what}", offset=off)
        out = blob[off:off + n]
        off += n
        return out

    if take(4, "magic") != MAGIC:
        raise FormatError("bad checkpoint magic", offset=0)
    (version,) = struct.unpack("<B", take(1, "version"))
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    (meta_len,) = struct.unpack("<I", take(4, "metadata length"))
    try:
        meta = json.loads(take(meta_len, "metadata"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt metadata: {exc}", offset=9) from None
    (n_arrays,) = struct.unpack("<I", take(4, "array count"))
    arrays = {}
    for _ in range(n_arrays):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode()
        tag, ndim = struct.unpack("<BB", take(2, "array header"))
        if tag not in _DTYPES:
            raise FormatError(f"unknown dtype tag {tag} for {name!r}", offset=off - 2)
        shape = tuple(
            struct.unpack("<I", take(4, "dimension"))[0] for _ in range(ndim)
        )
        dtype = np.dtype(_DTYPES[tag])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        raw = take(count * dtype.itemsize, f"payload of {name!r}")
        arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return meta, arrays

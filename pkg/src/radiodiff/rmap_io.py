"""Binary map persistence, CSV sample files, and grayscale ingestion.

The native container is deliberately tiny: a 14-byte header (magic,
version, dims, dtype tag) followed by the row-major payload.  Float maps
are stored at single precision, occupancy grids as raw bytes.
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np
from PIL import Image

from .errors import FormatError, ParameterError
from .grids import BuildingLayout, RadioMap, SampleSet

MAGIC = b"RMAP"
VERSION = 1
DTYPE_F32 = 0
DTYPE_U8 = 1

_HEADER = struct.Struct("<4sBIIB")

__all__ = [
    "save_map",
    "load_map",
    "save_samples",
    "load_samples",
    "import_grayscale",
]


def save_map(path, obj):
    """Write a RadioMap (as float32) or BuildingLayout (as bytes)."""
    if isinstance(obj, BuildingLayout):
        dtype_tag = DTYPE_U8
        payload = np.ascontiguousarray(obj.occupancy, dtype=np.uint8)
    elif isinstance(obj, RadioMap):
        dtype_tag = DTYPE_F32
        payload = np.ascontiguousarray(obj.values, dtype="<f4")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    h, w = payload.shape
    header = _HEADER.pack(MAGIC, VERSION, h, w, dtype_tag)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    os.replace(tmp, path)


def load_map(path):
    """Read a map container; the dtype tag selects the returned type."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError("truncated header", offset=len(blob))
    magic, version, h, w, dtype_tag = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if dtype_tag == DTYPE_F32:
        itemsize = 4
    elif dtype_tag == DTYPE_U8:
        itemsize = 1
    else:
        raise FormatError(f"unknown dtype tag {dtype_tag}", offset=13)
    expected = _HEADER.size + h * w * itemsize
    if len(blob) < expected:
        raise FormatError(
            f"truncated payload: need {expected} bytes, have {len(blob)}",
            offset=len(blob),
        )
    raw = blob[_HEADER.size:expected]
    if dtype_tag == DTYPE_F32:
        values = np.frombuffer(raw, dtype="<f4").reshape(h, w)
        return RadioMap(values)
    occupancy = np.frombuffer(raw, dtype=np.uint8).reshape(h, w)
    return BuildingLayout(occupancy)


def save_samples(path, samples):
    """Write a SampleSet as `row,col,rss` CSV with a header line."""
    if not isinstance(samples, SampleSet):
        raise TypeError("expected a SampleSet")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "rss"])
        for r, c, v in samples.entries():
            writer.writerow([r, c, repr(v)])
    os.replace(tmp, path)


def load_samples(path, height, width):
    """Read a sample CSV back into a SampleSet on an height x width grid."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty sample file", offset=0) from None
        if [col.strip() for col in header] != ["row", "col", "rss"]:
            raise FormatError(f"bad sample header {header!r}", offset=0)
        entries = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 3:
                raise FormatError(
                    f"line {lineno}: expected 3 fields, got {len(fields)}",
                    offset=lineno,
                )
            try:
                entries.append((int(fields[0]), int(fields[1]), float(fields[2])))
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}", offset=lineno) from None
    return SampleSet.from_entries(height, width, entries)


def import_grayscale(path, lo, hi):
    """Ingest an 8- or 16-bit single-channel image as a unit-scale map.

    Pixel p at bit depth D maps to p / (2**D - 1).  The (lo, hi) pair
    declares the dBm window the image encodes; the returned map is
    already unit-normalized, so the pair is only validated here and
    applied by callers through denormalize_rss when physical units are
    needed.
    """
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ParameterError(f"bad dBm window ({lo}, {hi})")
    with Image.open(path) as img:
        if img.mode == "L":
            depth = 8
        elif img.mode in ("I;16", "I;16B", "I;16L"):
            depth = 16
        elif img.mode == "I":
            # Pillow promotes some 16-bit PNGs to 32-bit integer mode.
            depth = 16
        else:
            raise FormatError(f"unsupported image mode {img.mode!r}", offset=0)
        pixels = np.asarray(img, dtype=np.float64)
    if pixels.ndim != 2:
        raise FormatError(f"expected single channel, got shape {pixels.shape}", offset=0)
    full = float(2 ** depth - 1)
    if pixels.min() < 0 or pixels.max() > full:
        raise FormatError("pixel values exceed declared bit depth", offset=0)
    return RadioMap(pixels / full)

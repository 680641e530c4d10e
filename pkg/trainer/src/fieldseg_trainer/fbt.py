"""Self-contained FBT1 reader/writer.

This module re-implements the documented FBT1 binary layout from scratch
so the trainer depends on the core toolkit only through files on disk,
never through its Python API. See docs/fbt1.md at the repository root
for the format definition.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"FBT1"
_HEADER = struct.Struct("<BBIIIIB")
_GEO = struct.Struct("<ddddH")

KIND_RASTER = 0
KIND_TILE = 1
KIND_BINARY_MASK = 2
KIND_NOLABEL_MASK = 3
KIND_INSTANCE_MAP = 4

_DTYPES = {0: np.dtype("<u1"), 1: np.dtype("<u2"),
           2: np.dtype("<f4"), 3: np.dtype("<u4")}
_DTYPE_CODES = {v: k for k, v in _DTYPES.items()}


class FormatError(ValueError):
    """Raised for any malformed FBT1 file."""


@dataclass(frozen=True)
class GeoRef:
    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    crs: str


@dataclass(frozen=True)
class Record:
    """One decoded FBT1 file: a kind tag plus the sample array.

    Array shapes: kind 0 -> (h, w, bands); kind 1 -> (n, n, bands,
    timesteps); kinds 2-4 -> (h, w).
    """

    kind: int
    data: np.ndarray
    geo: GeoRef | None = None


def read_record(path: str | Path) -> Record:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    kind, dcode, width, height, bands, timesteps, geo_flag = \
        _HEADER.unpack_from(raw, 4)
    off = 4 + _HEADER.size
    geo = None
    if geo_flag:
        ox, oy, px, py, crs_len = _GEO.unpack_from(raw, off)
        off += _GEO.size
        geo = GeoRef(ox, oy, px, py, raw[off:off + crs_len].decode("utf-8"))
        off += crs_len
    try:
        dt = _DTYPES[dcode]
    except KeyError:
        raise FormatError(f"{path}: unknown dtype code {dcode}") from None
    count = width * height * bands * timesteps
    buf = raw[off:]
    if len(buf) != count * dt.itemsize:
        raise FormatError(f"{path}: expected {count * dt.itemsize} sample "
                          f"bytes, found {len(buf)}")
    flat = np.frombuffer(buf, dtype=dt)
    if kind == KIND_RASTER:
        data = flat.reshape(height, width, bands)
    elif kind == KIND_TILE:
        data = flat.reshape(height, width, bands, timesteps)
    elif kind in (KIND_BINARY_MASK, KIND_NOLABEL_MASK, KIND_INSTANCE_MAP):
        data = flat.reshape(height, width)
        if kind != KIND_INSTANCE_MAP and data.max(initial=0) > 1:
            raise FormatError(f"{path}: mask contains values outside {{0,1}}")
    else:
        raise FormatError(f"{path}: unknown kind {kind}")
    return Record(kind=kind, data=data, geo=geo)


def write_record(rec: Record, path: str | Path) -> None:
    """Atomic write: the file appears complete or not at all."""
    data = np.ascontiguousarray(rec.data)
    if rec.kind == KIND_RASTER:
        h, w, bands = data.shape
        timesteps = 1
    elif rec.kind == KIND_TILE:
        h, w, bands, timesteps = data.shape
    else:
        h, w = data.shape
        bands = timesteps = 1
    dcode = _DTYPE_CODES[np.dtype(data.dtype).newbyteorder("<")]
    parts = [MAGIC,
             _HEADER.pack(rec.kind, dcode, w, h, bands, timesteps,
                          1 if rec.geo else 0)]
    if rec.geo:
        crs = rec.geo.crs.encode("utf-8")
        parts.append(_GEO.pack(rec.geo.origin_x, rec.geo.origin_y,
                               rec.geo.pixel_size_x, rec.geo.pixel_size_y,
                               len(crs)))
        parts.append(crs)
    parts.append(data.astype(data.dtype.newbyteorder("<"), copy=False).tobytes())
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(b"".join(parts))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

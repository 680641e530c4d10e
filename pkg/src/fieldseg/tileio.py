"""FBT1 binary tile format: bit-exact reader/writer for all record kinds.

Layout (all integers little-endian):

    bytes 0-3   magic "FBT1"
    byte  4     record kind: 0=raster 1=tile 2=binary_mask 3=nolabel_mask
                4=instance_map
    byte  5     dtype code: 0=u8 1=u16 2=f32 3=u32
    bytes 6-21  width, height, bands, timesteps (4 x u32)
    byte  22    geo flag (0 or 1)
    if geo flag:
        4 x f64  origin_x, origin_y, pixel_size_x, pixel_size_y
        u16      EPSG string length, then that many UTF-8 bytes
    then the raw sample buffer, row-major; rasters are band-interleaved
    by pixel, tiles are indexed (row, col, band, timestep).

The format is the cross-language contract consumed by the trainer
component; see docs/fbt1.md.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    HeaderOverflowError,
    TruncatedFileError,
)
from .raster import (
    BinaryMask,
    GeoTransform,
    InstanceMap,
    NoLabelMask,
    Raster,
    TileTensor,
)

MAGIC = b"FBT1"

KIND_RASTER = 0
KIND_TILE = 1
KIND_BINARY_MASK = 2
KIND_NOLABEL_MASK = 3
KIND_INSTANCE_MAP = 4

_DTYPE_CODES = {"u8": 0, "u16": 1, "f32": 2, "u32": 3}
_DTYPE_NAMES = {v: k for k, v in _DTYPE_CODES.items()}
_NP_DTYPES = {"u8": "<u1", "u16": "<u2", "f32": "<f4", "u32": "<u4"}

_HEADER = struct.Struct("<BBIIIIB")
_GEO = struct.Struct("<ddddH")

Record = Union[Raster, TileTensor, BinaryMask, NoLabelMask, InstanceMap]

_U32_MAX = 2**32 - 1


def _header_fields(obj: Record) -> tuple[int, str, int, int, int, int]:
    if isinstance(obj, Raster):
        return KIND_RASTER, obj.dtype, obj.width, obj.height, obj.bands, 1
    if isinstance(obj, TileTensor):
        return KIND_TILE, "f32", obj.size_n, obj.size_n, obj.bands_m, obj.timesteps_t
    if isinstance(obj, BinaryMask):
        return KIND_BINARY_MASK, "u8", obj.width, obj.height, 1, 1
    if isinstance(obj, NoLabelMask):
        return KIND_NOLABEL_MASK, "u8", obj.width, obj.height, 1, 1
    if isinstance(obj, InstanceMap):
        return KIND_INSTANCE_MAP, "u32", obj.width, obj.height, 1, 1
    raise DataError(f"unsupported record type {type(obj).__name__}")


def write_tile(obj: Record, path) -> None:
    """Write any record kind to an FBT1 file."""
    kind, dtype, width, height, bands, timesteps = _header_fields(obj)
    for v in (width, height, bands, timesteps):
        if v > _U32_MAX:
            raise HeaderOverflowError(f"header field {v} exceeds u32")
    geo = obj.geo
    parts = [MAGIC, _HEADER.pack(kind, _DTYPE_CODES[dtype], width, height,
                                 bands, timesteps, 1 if geo else 0)]
    if geo is not None:
        epsg = geo.epsg.encode("utf-8")
        if len(epsg) > 2**16 - 1:
            raise HeaderOverflowError("EPSG string too long")
        parts.append(_GEO.pack(geo.origin_x, geo.origin_y,
                               geo.pixel_size_x, geo.pixel_size_y, len(epsg)))
        parts.append(epsg)
    buf = np.ascontiguousarray(obj.data.astype(_NP_DTYPES[dtype], copy=False))
    parts.append(buf.tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_tile(path) -> Record:
    """Read an FBT1 file back into its typed record, re-validating invariants."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic")
    off = 4
    if len(raw) < off + _HEADER.size:
        raise TruncatedFileError(f"{path}: truncated header")
    kind, dcode, width, height, bands, timesteps, geoflag = _HEADER.unpack_from(raw, off)
    off += _HEADER.size
    if dcode not in _DTYPE_NAMES:
        raise DataError(f"{path}: unknown dtype code {dcode}")
    dtype = _DTYPE_NAMES[dcode]
    geo = None
    if geoflag:
        if len(raw) < off + _GEO.size:
            raise TruncatedFileError(f"{path}: truncated geo block")
        ox, oy, psx, psy, elen = _GEO.unpack_from(raw, off)
        off += _GEO.size
        if len(raw) < off + elen:
            raise TruncatedFileError(f"{path}: truncated EPSG string")
        epsg = raw[off:off + elen].decode("utf-8")
        off += elen
        geo = GeoTransform(ox, oy, psx, psy, epsg)
    np_dtype = np.dtype(_NP_DTYPES[dtype])
    count = width * height * bands * timesteps
    need = count * np_dtype.itemsize
    if len(raw) - off < need:
        raise TruncatedFileError(
            f"{path}: buffer holds {len(raw) - off} bytes, header promises {need}"
        )
    flat = np.frombuffer(raw, dtype=np_dtype, count=count, offset=off)

    if kind == KIND_RASTER:
        return Raster(flat.reshape(height, width, bands), dtype=dtype, geo=geo)
    if kind == KIND_TILE:
        if dtype != "f32":
            raise DataError(f"{path}: tile records must be f32")
        return TileTensor(flat.reshape(height, width, bands, timesteps), geo=geo)
    if kind == KIND_BINARY_MASK:
        return BinaryMask(flat.reshape(height, width), geo=geo)
    if kind == KIND_NOLABEL_MASK:
        return NoLabelMask(flat.reshape(height, width), geo=geo)
    if kind == KIND_INSTANCE_MAP:
        return InstanceMap(flat.reshape(height, width), geo=geo)
    raise DataError(f"{path}: unknown record kind {kind}")

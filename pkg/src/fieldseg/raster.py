"""Core raster and mask data types.

All types are immutable after construction (their numpy buffers are marked
read-only) and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvariantError

# dtype name -> numpy little-endian dtype
DTYPES = {
    "u8": np.dtype("<u1"),
    "u16": np.dtype("<u2"),
    "f32": np.dtype("<f4"),
}


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeoTransform:
    """Affine pixel-to-map mapping (axis-aligned, north-up)."""

    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    epsg: str = "EPSG:4326"

    def __post_init__(self):
        if not self.pixel_size_x > 0:
            raise InvariantError("pixel_size_x must be > 0")
        if self.pixel_size_y == 0:
            raise InvariantError("pixel_size_y must be nonzero")

    def world_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        """Map coordinates -> fractional (col, row)."""
        return (
            (x - self.origin_x) / self.pixel_size_x,
            (y - self.origin_y) / self.pixel_size_y,
        )

    def pixel_to_world(self, col: float, row: float) -> tuple[float, float]:
        return (
            self.origin_x + col * self.pixel_size_x,
            self.origin_y + row * self.pixel_size_y,
        )


@dataclass(frozen=True)
class Raster:
    """Multi-band image; data is (height, width, bands), band-interleaved."""

    data: np.ndarray
    dtype: str
    geo: Optional[GeoTransform] = None

    def __post_init__(self):
        if self.dtype not in DTYPES:
            raise InvariantError(f"unsupported dtype {self.dtype!r}")
        d = np.asarray(self.data)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3:
            raise InvariantError("raster data must be (height, width, bands)")
        h, w, b = d.shape
        if h <= 0 or w <= 0 or b <= 0:
            raise InvariantError("raster dimensions must be positive")
        object.__setattr__(self, "data", _freeze(d.astype(DTYPES[self.dtype])))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class TileTensor:
    """Model input tile, (size_n, size_n, bands_m, timesteps_t) float32."""

    data: np.ndarray
    geo: Optional[GeoTransform] = None

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim != 4:
            raise InvariantError("tile data must be (row, col, band, timestep)")
        n0, n1, m, t = d.shape
        if n0 != n1:
            raise InvariantError("tiles must be square")
        if n0 <= 0 or m <= 0 or t <= 0:
            raise InvariantError("tile dimensions must be positive")
        if not np.all(np.isfinite(d)):
            raise InvariantError("tile values must be finite")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def size_n(self) -> int:
        return self.data.shape[0]

    @property
    def bands_m(self) -> int:
        return self.data.shape[2]

    @property
    def timesteps_t(self) -> int:
        return self.data.shape[3]


def _check_binary(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d)
    if d.ndim != 2:
        raise InvariantError("mask data must be 2-D")
    if d.shape[0] <= 0 or d.shape[1] <= 0:
        raise InvariantError("mask dimensions must be positive")
    if not np.isin(d, (0, 1)).all():
        raise InvariantError("mask values must be 0 or 1")
    return d.astype(np.uint8)


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel 0/1 labels (border or interior)."""

    data: np.ndarray
    geo: Optional[GeoTransform] = None

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(_check_binary(self.data)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class NoLabelMask:
    """Label-validity mask: 1 = pixel has a valid label, 0 = unlabeled."""

    data: np.ndarray
    geo: Optional[GeoTransform] = None

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(_check_binary(self.data)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def all_labeled(cls, height: int, width: int) -> "NoLabelMask":
        return cls(np.ones((height, width), dtype=np.uint8))


@dataclass(frozen=True)
class InstanceMap:
    """Per-pixel instance identifiers; 0 is background."""

    data: np.ndarray
    geo: Optional[GeoTransform] = None

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise InvariantError("instance map data must be 2-D")
        if d.shape[0] <= 0 or d.shape[1] <= 0:
            raise InvariantError("instance map dimensions must be positive")
        if d.dtype.kind not in "ui" or (d.dtype.kind == "i" and (d < 0).any()):
            raise InvariantError("instance ids must be non-negative integers")
        object.__setattr__(self, "data", _freeze(d.astype(np.uint32)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def ids(self) -> np.ndarray:
        """Sorted distinct nonzero ids present in the map."""
        u = np.unique(self.data)
        return u[u > 0]


def threshold(prob: Raster, t: float) -> BinaryMask:
    """Binarize a single-band probability raster: 1 where value >= t."""
    if prob.bands != 1:
        raise InvariantError("threshold requires a single-band raster")
    vals = prob.data[:, :, 0].astype(np.float32)
    if not np.all(np.isfinite(vals)):
        raise InvariantError("threshold requires finite values")
    return BinaryMask((vals >= t).astype(np.uint8), geo=prob.geo)

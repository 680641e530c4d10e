"""Semantic-to-instance conversion and instance-map utilities.

Implements the lossless polygonize -> rasterize roundtrip used when
scoring instances: interior masks become corner-lattice polygons, and
polygons rasterize back by the even-odd pixel-center rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .errors import InvariantError
from .geometry import FieldPolygon, fill_even_odd, signed_area, trace_rings
from .raster import BinaryMask, InstanceMap


@dataclass(frozen=True)
class Connectivity:
    """Pixel adjacency: 'four' (edge neighbors) or 'eight' (plus diagonals)."""

    mode: str = "four"

    def __post_init__(self):
        if self.mode not in ("four", "eight"):
            raise InvariantError(f"unknown connectivity {self.mode!r}")

    @property
    def structure(self) -> np.ndarray:
        if self.mode == "four":
            return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
        return np.ones((3, 3), dtype=bool)


FOUR = Connectivity("four")
EIGHT = Connectivity("eight")


def extract_instances(interior: BinaryMask, conn: Connectivity = FOUR) -> InstanceMap:
    """Label maximal connected 1-regions with ids 1..K in raster-scan order."""
    lab, n = ndi.label(interior.data, structure=conn.structure)
    if n == 0:
        return InstanceMap(np.zeros_like(interior.data, dtype=np.uint32),
                           geo=interior.geo)
    flat = lab.ravel()
    # relabel by first raster-scan encounter
    ids, first = np.unique(flat, return_index=True)
    nz = ids > 0
    order = np.argsort(first[nz])
    remap = np.zeros(n + 1, dtype=np.uint32)
    remap[ids[nz][order]] = np.arange(1, nz.sum() + 1, dtype=np.uint32)
    return InstanceMap(remap[flat].reshape(lab.shape), geo=interior.geo)


def instances_to_polygons(imap: InstanceMap) -> list[FieldPolygon]:
    """One polygon per instance id, vertices on pixel corners, holes kept."""
    polys = []
    for iid in imap.ids():
        rings = trace_rings(imap.data == iid)
        # exterior (largest positive area) first; remaining rings in a
        # deterministic order
        rings.sort(key=lambda r: (-signed_area(r), r))
        polys.append(FieldPolygon(int(iid), tuple(rings)))
    return polys


def polygons_to_instance_map(polys, width: int, height: int,
                             geo=None) -> InstanceMap:
    """Rasterize polygons by pixel-center containment; later polygons win."""
    if width <= 0 or height <= 0:
        raise InvariantError("instance map dimensions must be positive")
    seen = set()
    for p in polys:
        if p.id in seen:
            raise InvariantError(f"duplicate polygon id {p.id}")
        seen.add(p.id)
    out = np.zeros((height, width), dtype=np.uint32)
    for p in polys:
        inside = fill_even_odd(p.rings, width, height)
        out[inside] = p.id
    return InstanceMap(out, geo=geo)


def _different_neighbor(data: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbor of different id or on the frame edge."""
    h, w = data.shape
    border = np.zeros((h, w), dtype=bool)
    fg = data > 0
    border[0, :] |= fg[0, :]
    border[-1, :] |= fg[-1, :]
    border[:, 0] |= fg[:, 0]
    border[:, -1] |= fg[:, -1]
    border[1:, :] |= fg[1:, :] & (data[1:, :] != data[:-1, :])
    border[:-1, :] |= fg[:-1, :] & (data[:-1, :] != data[1:, :])
    border[:, 1:] |= fg[:, 1:] & (data[:, 1:] != data[:, :-1])
    border[:, :-1] |= fg[:, :-1] & (data[:, :-1] != data[:, 1:])
    return border


def border_of(imap: InstanceMap) -> BinaryMask:
    """Foreground pixels adjacent (4-conn) to a different id or the frame edge."""
    return BinaryMask(_different_neighbor(imap.data).astype(np.uint8),
                      geo=imap.geo)


def interior_of(imap: InstanceMap) -> BinaryMask:
    """Foreground pixels that are not border pixels."""
    inner = (imap.data > 0) & ~_different_neighbor(imap.data)
    return BinaryMask(inner.astype(np.uint8), geo=imap.geo)


def filter_min_area(imap: InstanceMap, min_area: int) -> InstanceMap:
    """Drop instances smaller than min_area pixels; ids renumbered in scan order.

    Off by default in evaluation (min_area = 0 keeps everything).
    """
    if min_area <= 1:
        return imap
    data = imap.data
    counts = np.bincount(data.ravel())
    small = np.nonzero(counts < min_area)[0]
    keep = data.copy()
    keep[np.isin(data, small[small > 0])] = 0
    return _renumber(keep, imap.geo)


def _renumber(data: np.ndarray, geo) -> InstanceMap:
    """Renumber surviving ids to 1..K in first-encounter raster-scan order."""
    flat = data.ravel()
    ids, first = np.unique(flat, return_index=True)
    nz = ids > 0
    order = np.argsort(first[nz])
    remap = {int(old): new for new, old in
             enumerate(ids[nz][order].tolist(), start=1)}
    out = np.zeros_like(flat, dtype=np.uint32)
    for old, new in remap.items():
        out[flat == old] = new
    return InstanceMap(out.reshape(data.shape), geo=geo)

"""Polygon types and the shared rasterization / boundary-tracing primitives.

Two conventions fixed here and relied on everywhere:

* Filling uses the even-odd rule sampled at pixel centers (col + 0.5,
  row + 0.5); a pixel is inside when a ray to the left crosses the
  combined ring set an odd number of times.
* Traced boundary rings have vertices on pixel corners (integer
  lattice), exterior rings carry positive shoelace area and hole rings
  negative area, so the polygonize -> rasterize roundtrip is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError

Point = tuple[float, float]
Ring = tuple[Point, ...]


@dataclass(frozen=True)
class FieldPolygon:
    """Georeferenced field polygon: exterior ring first, then hole rings.

    Under the even-odd fill rule any additional ring simply toggles
    containment, so rings beyond the first may be holes or detached
    lobes of a corner-connected region.
    """

    id: int
    rings: tuple[Ring, ...]

    def __post_init__(self):
        if self.id <= 0:
            raise InvariantError("polygon id must be positive")
        if not self.rings:
            raise InvariantError("polygon needs at least one ring")
        rings = tuple(tuple((float(x), float(y)) for x, y in ring)
                      for ring in self.rings)
        for ring in rings:
            if len(ring) < 4:
                raise InvariantError("rings need at least 4 vertices")
            if ring[0] != ring[-1]:
                raise InvariantError("rings must be closed (first == last vertex)")
        object.__setattr__(self, "rings", rings)

    @property
    def exterior(self) -> Ring:
        return self.rings[0]


def signed_area(ring: Ring) -> float:
    """Shoelace area; positive for exterior rings in trace orientation."""
    a = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        a += x1 * y2 - x2 * y1
    return a / 2.0


def fill_even_odd(rings, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) array of pixels whose centers fall inside.

    Coordinates are pixel-space: x = column, y = row, y increasing
    downward. Vertices exactly on a sampling line are handled by the
    half-open [y1, y2) crossing rule.
    """
    out = np.zeros((height, width), dtype=bool)
    edges = []
    for ring in rings:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if y1 != y2:
                edges.append((x1, y1, x2, y2))
    if not edges:
        return out
    ex1, ey1, ex2, ey2 = (np.array(v, dtype=np.float64)
                          for v in zip(*edges))
    ymin = np.minimum(ey1, ey2)
    ymax = np.maximum(ey1, ey2)
    r_lo = max(0, int(math.floor(ymin.min() - 0.5)))
    r_hi = min(height, int(math.ceil(ymax.max())))
    for r in range(r_lo, r_hi):
        y = r + 0.5
        hit = (ymin <= y) & (y < ymax)
        if not hit.any():
            continue
        t = (y - ey1[hit]) / (ey2[hit] - ey1[hit])
        xs = np.sort(ex1[hit] + t * (ex2[hit] - ex1[hit]))
        for i in range(0, len(xs) - 1, 2):
            c0 = max(0, math.ceil(xs[i] - 0.5))
            c1 = min(width, math.ceil(xs[i + 1] - 0.5))
            if c1 > c0:
                out[r, c0:c1] = True
    return out


def bresenham(r0: int, c0: int, r1: int, c1: int):
    """8-connected integer line trace from (r0, c0) to (r1, c1), inclusive."""
    pts = []
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        pts.append((r, c))
        if r == r1 and c == c1:
            break
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
    return pts


def ring_pixel_vertices(ring: Ring) -> list[tuple[int, int]]:
    """Map ring vertices to (row, col) pixel indices for outline tracing.

    Vertices are nudged an epsilon toward the ring centroid before
    flooring, so coordinates that sit exactly on the pixel lattice
    resolve to the pixel on the polygon's side of the line.
    """
    eps = 1e-6
    pts = ring[:-1]
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    out = []
    for x, y in ring:
        nx = x + eps * (1 if cx > x else -1 if cx < x else 0)
        ny = y + eps * (1 if cy > y else -1 if cy < y else 0)
        out.append((int(math.floor(ny)), int(math.floor(nx))))
    return out


def outline_pixels(rings, width: int, height: int) -> np.ndarray:
    """1-px-wide boolean outline: Bresenham segments between ring vertices."""
    out = np.zeros((height, width), dtype=bool)
    for ring in rings:
        verts = ring_pixel_vertices(ring)
        for (r0, c0), (r1, c1) in zip(verts, verts[1:]):
            for r, c in bresenham(r0, c0, r1, c1):
                if 0 <= r < height and 0 <= c < width:
                    out[r, c] = True
    return out


def trace_rings(mask: np.ndarray) -> list[Ring]:
    """Trace the pixel-corner boundary rings of a boolean region.

    Each boundary unit edge is oriented so that walking it keeps the
    region on its inner side; exterior rings come out with positive
    shoelace area and holes negative. At checkerboard corners the walk
    continues along the edge contributed by the same pixel, which keeps
    corner-touching lobes in separate simple rings.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    pad = np.zeros((h + 2, w + 2), dtype=bool)
    pad[1:-1, 1:-1] = mask
    core = pad[1:-1, 1:-1]

    # start -> list of [end, pixel, used-flag]
    edges: dict[tuple[int, int], list] = {}

    def add(start, end, pixel):
        edges.setdefault(start, []).append([end, pixel, False])

    rs, cs = np.nonzero(core & ~pad[:-2, 1:-1])   # neighbor above outside
    for r, c in zip(rs.tolist(), cs.tolist()):
        add((c, r), (c + 1, r), (r, c))
    rs, cs = np.nonzero(core & ~pad[1:-1, 2:])    # neighbor right outside
    for r, c in zip(rs.tolist(), cs.tolist()):
        add((c + 1, r), (c + 1, r + 1), (r, c))
    rs, cs = np.nonzero(core & ~pad[2:, 1:-1])    # neighbor below outside
    for r, c in zip(rs.tolist(), cs.tolist()):
        add((c + 1, r + 1), (c, r + 1), (r, c))
    rs, cs = np.nonzero(core & ~pad[1:-1, :-2])   # neighbor left outside
    for r, c in zip(rs.tolist(), cs.tolist()):
        add((c, r + 1), (c, r), (r, c))

    rings = []
    for start_vertex in sorted(edges):
        for first in edges[start_vertex]:
            if first[2]:
                continue
            loop = [start_vertex]
            cur_end, cur_pix = first[0], first[1]
            first[2] = True
            while cur_end != start_vertex:
                loop.append(cur_end)
                options = [e for e in edges[cur_end] if not e[2]]
                if len(options) > 1:
                    same = [e for e in options if e[1] == cur_pix]
                    nxt = same[0] if same else options[0]
                else:
                    nxt = options[0]
                nxt[2] = True
                cur_end, cur_pix = nxt[0], nxt[1]
            loop.append(start_vertex)
            rings.append(_simplify_collinear(loop))
    return rings


def _simplify_collinear(loop) -> Ring:
    """Drop vertices interior to straight runs; loop is closed."""
    pts = loop[:-1]
    n = len(pts)
    keep = []
    for i in range(n):
        px, py = pts[i - 1]
        x, y = pts[i]
        nx, ny = pts[(i + 1) % n]
        if (x - px) * (ny - y) != (y - py) * (nx - x):
            keep.append((float(x), float(y)))
    if not keep:  # degenerate; keep the raw loop
        keep = [(float(x), float(y)) for x, y in pts]
    # rotate so the lexicographically smallest vertex leads (determinism)
    k = keep.index(min(keep))
    keep = keep[k:] + keep[:k]
    keep.append(keep[0])
    return tuple(keep)

"""Unsupervised field delineation: Canny edges, seeded priority-flood
watershed, and a rule-set filter that discards non-field segments.

Every stage is deterministic; identical inputs and parameters give
bitwise-identical outputs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .errors import DataError, InvariantError
from .instances import border_of
from .raster import BinaryMask, InstanceMap, Raster, TileTensor


@dataclass(frozen=True)
class CWParams:
    """Parameters for the Canny + watershed pipeline.

    The defaults were tuned once on synthetic scenes and are frozen;
    reflectance-unit thresholds assume inputs roughly in [0, 1].
    """

    gaussian_sigma: float = 1.5
    canny_low: float = 0.02
    canny_high: float = 0.08
    min_field_area: int = 64
    max_field_area: int = 12000
    homogeneity_max_std: float = 0.12
    seed_min_distance: int = 5

    def __post_init__(self):
        if not self.canny_low < self.canny_high:
            raise InvariantError("canny_low must be below canny_high")
        if not self.min_field_area < self.max_field_area:
            raise InvariantError("min_field_area must be below max_field_area")
        if not self.gaussian_sigma > 0:
            raise InvariantError("gaussian_sigma must be positive")


def _single_band(img: Raster) -> np.ndarray:
    if img.bands != 1:
        raise DataError("expected a single-band raster")
    vals = img.data[:, :, 0].astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise DataError("image values must be finite")
    return vals


def _smoothed_gradient(vals: np.ndarray, sigma: float):
    smoothed = ndi.gaussian_filter(vals, sigma=sigma, mode="nearest")
    gx = ndi.sobel(smoothed, axis=1, mode="nearest")
    gy = ndi.sobel(smoothed, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    return mag, gx, gy


def canny(img: Raster, low: float, high: float, sigma: float) -> BinaryMask:
    """Gaussian smoothing, Sobel gradients, non-maximum suppression along
    the gradient direction, then double-threshold hysteresis.

    Suppression keeps a pixel when its magnitude is >= the first neighbor
    and strictly > the second along the gradient line, so a symmetric
    two-pixel ridge thins to a single-pixel edge.
    """
    vals = _single_band(img)
    mag, gx, gy = _smoothed_gradient(vals, sigma)

    angle = np.arctan2(gy, gx)  # quantize into 4 directions
    q = np.round(angle / (np.pi / 4.0)).astype(int) % 4

    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")

    def shifted(dr, dc):
        return padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]

    # neighbor offsets per quantized direction: (first, second)
    neighbors = {
        0: ((0, -1), (0, 1)),    # horizontal gradient -> E/W neighbors
        1: ((-1, -1), (1, 1)),   # diagonal
        2: ((-1, 0), (1, 0)),    # vertical gradient -> N/S neighbors
        3: ((-1, 1), (1, -1)),   # anti-diagonal
    }
    keep = np.zeros((h, w), dtype=bool)
    for d, ((r1, c1), (r2, c2)) in neighbors.items():
        sel = q == d
        keep |= sel & (mag >= shifted(r1, c1)) & (mag > shifted(r2, c2))
    thinned = np.where(keep, mag, 0.0)

    strong = thinned > high
    weak = thinned > low
    if not strong.any():
        return BinaryMask(np.zeros((h, w), dtype=np.uint8), geo=img.geo)
    lab, _ = ndi.label(weak, structure=np.ones((3, 3), dtype=bool))
    good = np.unique(lab[strong])
    edges = np.isin(lab, good[good > 0]) & weak
    return BinaryMask(edges.astype(np.uint8), geo=img.geo)


def watershed(relief: Raster, seeds: InstanceMap) -> InstanceMap:
    """Priority-flood watershed: every pixel joins the basin that reaches
    it first by ascending relief value.

    The flood queue is keyed (relief value, entry order); seeds and
    neighbors enter in raster-scan order, which makes ties deterministic.
    Every pixel receives a label; boundaries are recovered afterwards
    with border_of.
    """
    vals = _single_band(relief)
    h, w = vals.shape
    if seeds.data.shape != vals.shape:
        raise DataError("seed map dimensions must match the relief")
    labels = seeds.data.astype(np.int64).copy()
    if not (labels > 0).any():
        raise DataError("watershed needs at least one seed")

    heap = []
    counter = 0
    rs, cs = np.nonzero(labels > 0)
    for r, c in zip(rs.tolist(), cs.tolist()):
        heapq.heappush(heap, (vals[r, c], counter, r, c))
        counter += 1
    queued = labels > 0

    while heap:
        _, _, r, c = heapq.heappop(heap)
        lab = labels[r, c]
        for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not queued[nr, nc]:
                queued[nr, nc] = True
                labels[nr, nc] = lab
                heapq.heappush(heap, (vals[nr, nc], counter, nr, nc))
                counter += 1
    return InstanceMap(labels.astype(np.uint32), geo=relief.geo)


def generate_seeds(relief: Raster, min_distance: int) -> InstanceMap:
    """Seed one marker per local-minimum plateau of the relief.

    A plateau counts as a minimum when it has no strictly-lower neighbor
    and at least one strictly-higher one (a constant image yields no
    seeds). Seeds closer than min_distance are suppressed, keeping the
    lower minimum; ties keep the earlier pixel in raster-scan order.
    """
    vals = _single_band(relief)
    h, w = vals.shape
    is_min = vals <= ndi.minimum_filter(vals, size=3, mode="nearest")
    has_higher = ndi.maximum_filter(vals, size=3, mode="nearest") > vals
    # plateau regions: connected candidate pixels of equal value
    lab, n = ndi.label(is_min, structure=np.ones((3, 3), dtype=bool))
    seeds = []  # (value, row, col)
    for i in range(1, n + 1):
        region = lab == i
        rs, cs = np.nonzero(region)
        v = vals[rs[0], cs[0]]
        if not np.all(vals[region] == v):
            # mixed-value candidate region: split by value is overkill for
            # seeding; take the lowest pixel only
            k = np.argmin(vals[region])
            seeds.append((float(vals[rs[k], cs[k]]), int(rs[k]), int(cs[k])))
            continue
        if not has_higher[region].any():
            continue  # plateau with no uphill neighbor (e.g. constant image)
        seeds.append((float(v), int(rs[0]), int(cs[0])))

    seeds.sort(key=lambda s: (s[0], s[1], s[2]))
    kept = []
    for v, r, c in seeds:
        if all((r - kr) ** 2 + (c - kc) ** 2 >= min_distance ** 2
               for _, kr, kc in kept):
            kept.append((v, r, c))
    kept.sort(key=lambda s: (s[1], s[2]))  # ids in raster-scan order

    out = np.zeros((h, w), dtype=np.uint32)
    for i, (_, r, c) in enumerate(kept, start=1):
        out[r, c] = i
    return InstanceMap(out, geo=relief.geo)


def ruleset_filter(segments: InstanceMap, tile: TileTensor,
                   p: CWParams) -> InstanceMap:
    """Discard segments that cannot be cultivated fields.

    Removes segments outside [min_field_area, max_field_area] and
    segments whose per-band standard deviation in the last timestep
    exceeds homogeneity_max_std. Survivors are renumbered 1..K in
    raster-scan order.
    """
    data = segments.data
    if data.shape != tile.data.shape[:2]:
        raise DataError("segment map and tile dimensions must match")
    last = tile.data[:, :, :, -1].astype(np.float64)
    out = data.copy()
    for iid in segments.ids():
        region = data == iid
        area = int(region.sum())
        if area < p.min_field_area or area > p.max_field_area:
            out[region] = 0
            continue
        stds = last[region].std(axis=0)  # per band
        if stds.max() > p.homogeneity_max_std:
            out[region] = 0
    # renumber in first-encounter raster-scan order
    flat = out.ravel()
    ids, first = np.unique(flat, return_index=True)
    nz = ids > 0
    order = np.argsort(first[nz])
    remap = np.zeros(int(ids.max()) + 1 if ids.size else 1, dtype=np.uint32)
    remap[ids[nz][order]] = np.arange(1, int(nz.sum()) + 1, dtype=np.uint32)
    return InstanceMap(remap[flat].reshape(out.shape), geo=segments.geo)


def delineate(tile: TileTensor, p: CWParams) -> tuple[BinaryMask, InstanceMap]:
    """Full unsupervised pipeline on one tile.

    Luminance (mean of bands) of the last timestep -> Canny -> relief =
    gradient magnitude with edge pixels raised to the global maximum ->
    seeds -> watershed -> rule-set filter. Returns the derived border
    mask and the surviving field instances; no interior mask is produced.
    """
    lum = tile.data[:, :, :, -1].astype(np.float64).mean(axis=2)
    lum_raster = Raster(lum.astype(np.float32)[:, :, None], dtype="f32",
                        geo=tile.geo)
    edges = canny(lum_raster, p.canny_low, p.canny_high, p.gaussian_sigma)
    mag, _, _ = _smoothed_gradient(lum, p.gaussian_sigma)
    # sub-detection-threshold gradient is treated as flat so each field
    # interior forms a single seed plateau
    mag = np.where(mag < p.canny_low, 0.0, mag)
    wall = mag.max() if mag.max() > 0 else 1.0
    relief = np.where(edges.data == 1, wall, mag).astype(np.float32)
    relief_raster = Raster(relief[:, :, None], dtype="f32", geo=tile.geo)
    seeds = generate_seeds(relief_raster, p.seed_min_distance)
    empty = InstanceMap(np.zeros_like(seeds.data), geo=tile.geo)
    if len(seeds.ids()) == 0:
        return border_of(empty), empty
    basins = watershed(relief_raster, seeds)
    fields = ruleset_filter(basins, tile, p)
    return border_of(fields), fields

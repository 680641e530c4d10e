"""Deterministic synthetic field scenes with exact ground truth.

Fields are non-overlapping axis-aligned rectangles separated by at
least boundary_gap background pixels, so areas and IoUs are exactly
computable by arithmetic and the masks/polygons/instance map are
mutually consistent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvariantError
from .geometry import FieldPolygon
from .instances import border_of, interior_of
from .raster import BinaryMask, InstanceMap, NoLabelMask, TileTensor


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    width: int = 224
    height: int = 224
    n_fields: int = 10
    field_size_range: tuple[int, int] = (20, 48)
    timesteps: int = 3
    bands: int = 3
    noise_std: float = 0.0
    boundary_gap: int = 2

    def __post_init__(self):
        if self.n_fields < 0:
            raise InvariantError("n_fields must be non-negative")
        lo, hi = self.field_size_range
        if lo <= 0 or hi < lo:
            raise InvariantError("field_size_range must be positive and ordered")
        if self.boundary_gap < 1:
            raise InvariantError("boundary_gap must be at least 1")
        if self.width <= 0 or self.height <= 0:
            raise InvariantError("scene dimensions must be positive")
        if self.timesteps <= 0 or self.bands <= 0:
            raise InvariantError("timesteps and bands must be positive")
        if self.noise_std < 0:
            raise InvariantError("noise_std must be non-negative")


@dataclass(frozen=True)
class Scene:
    spec: SceneSpec
    tile: TileTensor
    polygons: tuple[FieldPolygon, ...]
    instance_map: InstanceMap
    border: BinaryMask
    interior: BinaryMask
    nolabel: NoLabelMask
    rects: tuple[tuple[int, int, int, int], ...]  # (row, col, h, w) per field


def generate(spec: SceneSpec, max_retries: int = 200) -> Scene:
    """Generate one scene; deterministic in spec.seed."""
    if spec.width != spec.height:
        raise DataError("tile scenes must be square (width == height)")
    rng = np.random.default_rng(spec.seed)
    gap = spec.boundary_gap
    lo, hi = spec.field_size_range

    rects: list[tuple[int, int, int, int]] = []
    for _ in range(spec.n_fields):
        placed = False
        for _ in range(max_retries):
            fh = int(rng.integers(lo, hi + 1))
            fw = int(rng.integers(lo, hi + 1))
            if spec.height - fh - 2 * gap <= 0 or spec.width - fw - 2 * gap <= 0:
                continue
            r0 = int(rng.integers(gap, spec.height - fh - gap + 1))
            c0 = int(rng.integers(gap, spec.width - fw - gap + 1))
            if not any(
                r0 < rr + rh + gap and rr < r0 + fh + gap and
                c0 < cc + cw + gap and cc < c0 + fw + gap
                for rr, cc, rh, cw in rects
            ):
                rects.append((r0, c0, fh, fw))
                placed = True
                break
        if not placed:
            raise DataError(
                f"could not place {spec.n_fields} fields without overlap")

    imap = np.zeros((spec.height, spec.width), dtype=np.uint32)
    polys = []
    for i, (r0, c0, fh, fw) in enumerate(rects, start=1):
        imap[r0:r0 + fh, c0:c0 + fw] = i
        ring = ((float(c0), float(r0)), (float(c0 + fw), float(r0)),
                (float(c0 + fw), float(r0 + fh)), (float(c0), float(r0 + fh)),
                (float(c0), float(r0)))
        polys.append(FieldPolygon(i, (ring,)))

    instance_map = InstanceMap(imap)
    border = border_of(instance_map)
    interior = interior_of(instance_map)
    nolabel = NoLabelMask.all_labeled(spec.height, spec.width)

    # reflectance: per-timestep background level plus a per-field
    # per-timestep trajectory simulating seasonal vegetation change
    data = np.empty((spec.height, spec.width, spec.bands, spec.timesteps),
                    dtype=np.float32)
    bg = 0.10 + 0.04 * rng.random((spec.bands, spec.timesteps))
    data[:] = bg[None, None, :, :]
    for i, (r0, c0, fh, fw) in enumerate(rects, start=1):
        traj = 0.45 + 0.5 * rng.random((spec.bands, spec.timesteps))
        data[r0:r0 + fh, c0:c0 + fw] = traj[None, None, :, :]
    if spec.noise_std > 0:
        data = data + rng.normal(0.0, spec.noise_std, size=data.shape)
    tile = TileTensor(data.astype(np.float32))

    return Scene(spec=spec, tile=tile, polygons=tuple(polys),
                 instance_map=instance_map, border=border, interior=interior,
                 nolabel=nolabel, rects=tuple(rects))


@dataclass(frozen=True)
class DegradeResult:
    instance_map: InstanceMap
    dropped_ids: tuple[int, ...]
    offsets: dict  # surviving id -> (row shift, col shift)


def degrade(instances: InstanceMap, drop_fraction: float, jitter_px: int,
            seed: int = 0) -> DegradeResult:
    """Delete a seeded fraction of instances and jitter the survivors.

    Returns the degraded map plus exact bookkeeping of what changed,
    which downstream metric tests use as their oracle.
    """
    if not 0.0 <= drop_fraction <= 1.0:
        raise InvariantError("drop_fraction must be in [0, 1]")
    if jitter_px < 0:
        raise InvariantError("jitter_px must be non-negative")
    rng = np.random.default_rng(seed)
    ids = [int(i) for i in instances.ids()]
    n_drop = int(drop_fraction * len(ids))
    dropped = sorted(int(i) for i in
                     rng.choice(ids, size=n_drop, replace=False)) if n_drop else []
    dropped_set = set(dropped)

    h, w = instances.data.shape
    out = np.zeros((h, w), dtype=np.uint32)
    offsets = {}
    for iid in ids:
        if iid in dropped_set:
            continue
        dr = int(rng.integers(-jitter_px, jitter_px + 1)) if jitter_px else 0
        dc = int(rng.integers(-jitter_px, jitter_px + 1)) if jitter_px else 0
        offsets[iid] = (dr, dc)
        rs, cs = np.nonzero(instances.data == iid)
        nr, nc = rs + dr, cs + dc
        keep = (nr >= 0) & (nr < h) & (nc >= 0) & (nc < w)
        out[nr[keep], nc[keep]] = iid
    return DegradeResult(InstanceMap(out, geo=instances.geo),
                         tuple(dropped), offsets)

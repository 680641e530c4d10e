"""Data pipeline: seasonal compositing, tiling, label rasterization,
deterministic splits, and the manifest / GeoJSON-subset file formats."""

from __future__ import annotations

import datetime
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InvariantError
from .geometry import FieldPolygon, fill_even_odd, outline_pixels, signed_area
from .raster import (
    BinaryMask,
    GeoTransform,
    InstanceMap,
    NoLabelMask,
    Raster,
    TileTensor,
)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class DateRange:
    start: datetime.date
    end: datetime.date

    def __post_init__(self):
        if self.start > self.end:
            raise InvariantError("date range start must not exceed end")

    def __contains__(self, d: datetime.date) -> bool:
        return self.start <= d <= self.end


@dataclass(frozen=True)
class ManifestEntry:
    """One training/evaluation example and the files that hold it."""

    name: str
    tile: str
    border: str
    interior: str
    nolabel: str
    region: str = ""
    split: str = ""
    instances: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name, "tile": self.tile, "border": self.border,
            "interior": self.interior, "nolabel": self.nolabel,
            "region": self.region, "split": self.split,
            "instances": self.instances,
        }


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    seed: int = 0
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def subset(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]


def seasonal_median_composite(stack: Sequence[tuple[Raster, datetime.date]],
                              date_range: DateRange) -> Raster:
    """Per-pixel, per-band median over the rasters dated inside the range.

    Even selections use the arithmetic mean of the two middle values.
    """
    selected = [r for r, d in stack if d in date_range]
    if not selected:
        raise DataError("no rasters fall inside the composite date range")
    first = selected[0]
    for r in selected[1:]:
        if (r.width, r.height, r.bands) != (first.width, first.height, first.bands):
            raise DataError("composite inputs must share dimensions and bands")
        if r.geo != first.geo:
            raise DataError("composite inputs must share georeferencing")
    cube = np.stack([r.data.astype(np.float32) for r in selected], axis=0)
    med = np.median(cube, axis=0).astype(np.float32)
    return Raster(med, dtype="f32", geo=first.geo)


def tile_grid(composites: Sequence[Raster], tile_size: int = 224) -> list[TileTensor]:
    """Cut a non-overlapping row-major grid of (tile, tile, M, T) tensors.

    Partial tiles at the right/bottom edges are dropped.
    """
    if not composites:
        raise DataError("tile_grid needs at least one composite")
    first = composites[0]
    for r in composites[1:]:
        if (r.width, r.height, r.bands) != (first.width, first.height, first.bands):
            raise DataError("composites must share dimensions and band count")
    if first.width < tile_size or first.height < tile_size:
        raise DataError("raster is smaller than one tile")
    cube = np.stack([r.data.astype(np.float32) for r in composites], axis=3)
    tiles = []
    for r0 in range(0, first.height - tile_size + 1, tile_size):
        for c0 in range(0, first.width - tile_size + 1, tile_size):
            geo = None
            if first.geo is not None:
                geo = replace(
                    first.geo,
                    origin_x=first.geo.origin_x + c0 * first.geo.pixel_size_x,
                    origin_y=first.geo.origin_y + r0 * first.geo.pixel_size_y,
                )
            tiles.append(TileTensor(
                cube[r0:r0 + tile_size, c0:c0 + tile_size], geo=geo))
    return tiles


def _rings_in_pixel_space(poly: FieldPolygon,
                          geo: Optional[GeoTransform]) -> list:
    if geo is None:
        return list(poly.rings)
    return [tuple(geo.world_to_pixel(x, y) for x, y in ring)
            for ring in poly.rings]


def labels_to_masks(polygons: Sequence[FieldPolygon], width: int, height: int,
                    geo: Optional[GeoTransform] = None,
                    fully_labeled: bool = True
                    ) -> tuple[BinaryMask, BinaryMask, NoLabelMask]:
    """Rasterize field polygons into (border, interior, nolabel) masks.

    Interior: pixel centers strictly inside a polygon (even-odd rule).
    Border: 1-px outline traced with Bresenham segments between ring
    vertices; a pixel that is both becomes border. Fully-labeled sets
    get an all-ones nolabel mask; otherwise nolabel covers exactly the
    border and interior pixels.
    """
    if width <= 0 or height <= 0:
        raise InvariantError("frame dimensions must be positive")
    border = np.zeros((height, width), dtype=bool)
    interior = np.zeros((height, width), dtype=bool)
    skipped = 0
    for poly in polygons:
        rings = _rings_in_pixel_space(poly, geo)
        if abs(signed_area(rings[0])) == 0.0:
            skipped += 1
            continue
        interior |= fill_even_odd(rings, width, height)
        border |= outline_pixels(rings, width, height)
    interior &= ~border
    if skipped:
        warnings.warn(f"skipped {skipped} degenerate zero-area polygon(s)",
                      stacklevel=2)
    if fully_labeled:
        nolabel = np.ones((height, width), dtype=np.uint8)
    else:
        nolabel = (border | interior).astype(np.uint8)
    return (BinaryMask(border.astype(np.uint8), geo=geo),
            BinaryMask(interior.astype(np.uint8), geo=geo),
            NoLabelMask(nolabel, geo=geo))


# --- deterministic split -------------------------------------------------
#
# The shuffle PRNG is pinned so every implementation of this toolkit
# produces identical splits: splitmix64 seeding followed by xorshift64*
# (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D), Fisher-Yates with
# j = next() mod (i + 1). See docs/fbt1.md.

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Xorshift64Star:
    """xorshift64* PRNG; deterministic across platforms."""

    def __init__(self, seed: int):
        self.state = _splitmix64(seed & _MASK64)
        if self.state == 0:
            self.state = 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x = (x ^ (x << 25)) & _MASK64
        x ^= (x >> 27)
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64


def random_split(entries: Sequence[ManifestEntry],
                 ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
                 seed: int = 0) -> DatasetManifest:
    """Assign train/val/test tags with a platform-stable shuffle.

    Sizes: floor(ratio * n) for val and test, remainder to train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvariantError("split ratios must sum to 1.0")
    n = len(entries)
    if n < 3:
        raise DataError("need at least 3 entries to split")
    idx = list(range(n))
    rng = Xorshift64Star(seed)
    for i in range(n - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    n_val = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_val - n_test
    tagged = [None] * n
    for pos, src in enumerate(idx):
        if pos < n_train:
            tag = "train"
        elif pos < n_train + n_val:
            tag = "val"
        else:
            tag = "test"
        tagged[src] = replace(entries[src], split=tag)
    return DatasetManifest(tuple(tagged), seed=seed, ratios=tuple(ratios))


def mean_fields_per_image(maps: Sequence[InstanceMap]) -> float:
    """Arithmetic mean of per-image distinct nonzero instance-id counts."""
    if not maps:
        raise DataError("mean_fields_per_image needs at least one map")
    return float(np.mean([len(m.ids()) for m in maps]))


# --- manifest file format (line-delimited JSON) --------------------------

def write_manifest(manifest: DatasetManifest, path) -> None:
    lines = [json.dumps({"__meta__": 1, "seed": manifest.seed,
                         "ratios": list(manifest.ratios)}, sort_keys=True)]
    lines += [json.dumps(e.to_json(), sort_keys=True) for e in manifest.entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> DatasetManifest:
    seed, ratios = 0, (0.8, 0.1, 0.1)
    entries = []
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise DataError(f"cannot read manifest {path}: {e}") from e
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}:{lineno}: bad JSON: {e}") from e
        if rec.get("__meta__"):
            seed = int(rec.get("seed", 0))
            ratios = tuple(rec.get("ratios", ratios))
            continue
        try:
            entries.append(ManifestEntry(
                name=rec["name"], tile=rec["tile"], border=rec["border"],
                interior=rec["interior"], nolabel=rec["nolabel"],
                region=rec.get("region", ""), split=rec.get("split", ""),
                instances=rec.get("instances", "")))
        except KeyError as e:
            raise DataError(f"{path}:{lineno}: missing field {e}") from e
    return DatasetManifest(tuple(entries), seed=seed, ratios=ratios)


# --- GeoJSON-subset polygon files ----------------------------------------
#
# Supported: FeatureCollection of Polygon / MultiPolygon features with a
# numeric "id" property. Ring coordinates are [x, y] pairs.

def write_polygons(polys: Sequence[FieldPolygon], path) -> None:
    features = []
    for p in polys:
        coords = [[[x, y] for x, y in ring] for ring in p.rings]
        features.append({
            "type": "Feature",
            "properties": {"id": p.id},
            "geometry": {"type": "Polygon", "coordinates": coords},
        })
    Path(path).write_text(json.dumps(
        {"type": "FeatureCollection", "features": features}, sort_keys=True))


def read_polygons(path) -> list[FieldPolygon]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read polygons {path}: {e}") from e
    if doc.get("type") != "FeatureCollection":
        raise DataError(f"{path}: expected a FeatureCollection")
    polys = []
    for feat in doc.get("features", []):
        props = feat.get("properties") or {}
        if "id" not in props:
            raise DataError(f"{path}: feature lacks numeric 'id' property")
        pid = int(props["id"])
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "Polygon":
            ring_sets = [geom["coordinates"]]
        elif gtype == "MultiPolygon":
            ring_sets = geom["coordinates"]
        else:
            raise DataError(f"{path}: unsupported geometry type {gtype!r}")
        rings = []
        for rs in ring_sets:
            for ring in rs:
                rings.append(tuple((float(x), float(y)) for x, y in ring))
        polys.append(FieldPolygon(pid, tuple(rings)))
    return polys

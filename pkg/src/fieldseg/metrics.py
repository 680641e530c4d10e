"""Evaluation suite: pixel F1 / overall accuracy, per-image mean IoU,
and instance precision at a high IoU threshold, all with no-label masking."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InvariantError, MissingPredictionsError
from .instances import (
    Connectivity,
    FOUR,
    extract_instances,
    filter_min_area,
    instances_to_polygons,
    polygons_to_instance_map,
)
from .pipeline import DatasetManifest, ManifestEntry
from .raster import BinaryMask, InstanceMap, NoLabelMask, Raster, threshold
from .tileio import read_tile


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvariantError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class InstanceMatchResult:
    tp_count: int
    fp_count: int
    fn_count: int
    pairs: tuple[tuple[int, int, float], ...]  # (pred id, gt id, iou)
    threshold: float = 0.95


def pixel_confusion(pred: BinaryMask, gt: BinaryMask,
                    nolabel: NoLabelMask | None = None) -> ConfusionCounts:
    """Pixel counts over the labeled region only (nolabel == 1).

    A missing validity mask means every pixel is labeled.
    """
    if pred.data.shape != gt.data.shape:
        raise DataError("confusion inputs must share dimensions")
    if nolabel is not None and pred.data.shape != nolabel.data.shape:
        raise DataError("confusion inputs must share dimensions")
    m = (np.ones(pred.data.shape, dtype=bool) if nolabel is None
         else nolabel.data == 1)
    p = pred.data[m] == 1
    g = gt.data[m] == 1
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(tp, fp, fn, tn)


def f1(c: ConfusionCounts) -> float:
    """2TP / (2TP + FP + FN); zero denominator reported as 0 (see f1_defined)."""
    denom = 2 * c.tp + c.fp + c.fn
    return 2 * c.tp / denom if denom else 0.0


def f1_defined(c: ConfusionCounts) -> bool:
    return (2 * c.tp + c.fp + c.fn) > 0


def accuracy(c: ConfusionCounts) -> float:
    denom = c.tp + c.tn + c.fp + c.fn
    return (c.tp + c.tn) / denom if denom else 0.0


def accuracy_defined(c: ConfusionCounts) -> bool:
    return (c.tp + c.tn + c.fp + c.fn) > 0


def miou(per_image: Sequence[ConfusionCounts]) -> float:
    """Mean over images of TP/(TP+FP+FN); an empty, correct image counts 1.0."""
    if not per_image:
        raise DataError("miou needs at least one image")
    total = 0.0
    for c in per_image:
        denom = c.tp + c.fp + c.fn
        total += c.tp / denom if denom else 1.0
    return total / len(per_image)


def match_instances(pred: InstanceMap, gt: InstanceMap,
                    nolabel: Optional[NoLabelMask] = None,
                    iou_threshold: float = 0.95) -> InstanceMatchResult:
    """Greedy one-to-one instance matching at an IoU threshold.

    IoU is computed over labeled pixels only; instances with zero
    footprint inside the labeled region are excluded on both sides.
    Candidates are taken in descending IoU, ties broken by smaller gt
    id then smaller pred id.
    """
    if pred.data.shape != gt.data.shape:
        raise DataError("instance maps must share dimensions")
    if not (0.0 < iou_threshold <= 1.0):
        raise InvariantError("iou_threshold must be in (0, 1]")
    if nolabel is not None:
        if nolabel.data.shape != pred.data.shape:
            raise DataError("nolabel mask must share dimensions")
        m = nolabel.data == 1
        p = pred.data[m].astype(np.int64)
        g = gt.data[m].astype(np.int64)
    else:
        p = pred.data.ravel().astype(np.int64)
        g = gt.data.ravel().astype(np.int64)

    p_ids, p_inv = np.unique(p, return_inverse=True)
    g_ids, g_inv = np.unique(g, return_inverse=True)
    joint = np.bincount(p_inv * len(g_ids) + g_inv,
                        minlength=len(p_ids) * len(g_ids))
    joint = joint.reshape(len(p_ids), len(g_ids))
    p_area = joint.sum(axis=1)
    g_area = joint.sum(axis=0)

    candidates = []
    for i, pid in enumerate(p_ids):
        if pid == 0:
            continue
        for j, gid in enumerate(g_ids):
            if gid == 0:
                continue
            inter = joint[i, j]
            if inter == 0:
                continue
            union = p_area[i] + g_area[j] - inter
            iou = inter / union
            if iou >= iou_threshold:
                candidates.append((iou, int(gid), int(pid)))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    used_p, used_g, pairs = set(), set(), []
    for iou, gid, pid in candidates:
        if pid in used_p or gid in used_g:
            continue
        used_p.add(pid)
        used_g.add(gid)
        pairs.append((pid, gid, float(iou)))

    n_pred = int(np.count_nonzero(p_ids > 0))
    n_gt = int(np.count_nonzero(g_ids > 0))
    tp = len(pairs)
    return InstanceMatchResult(tp, n_pred - tp, n_gt - tp, tuple(pairs),
                               threshold=iou_threshold)


def precision_at_iou(r: InstanceMatchResult) -> float:
    """TP / (TP + FP); 0.0 when no predictions (flag via precision_defined)."""
    denom = r.tp_count + r.fp_count
    return r.tp_count / denom if denom else 0.0


def precision_defined(r: InstanceMatchResult) -> bool:
    return (r.tp_count + r.fp_count) > 0


# --- dataset evaluation ---------------------------------------------------

HEADS = ("border", "interior")


@dataclass(frozen=True)
class EvalConfig:
    threshold: float = 0.5
    iou_threshold: float = 0.95
    connectivity: Connectivity = FOUR
    min_instance_area: int = 0
    heads: tuple[str, ...] = HEADS


@dataclass(frozen=True)
class HeadMetrics:
    f1: float
    accuracy: float
    miou: float
    p_at_iou: float
    undefined: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"f1": self.f1, "accuracy": self.accuracy, "miou": self.miou,
                "p_at_iou": self.p_at_iou, "undefined": list(self.undefined)}


@dataclass(frozen=True)
class MetricsReport:
    heads: dict  # head name -> HeadMetrics or None (head not applicable)
    n_images: int
    threshold: float
    iou_threshold: float = 0.95

    def to_json(self) -> str:
        doc = {
            "n_images": self.n_images,
            "threshold": self.threshold,
            "iou_threshold": self.iou_threshold,
            "heads": {h: (m.to_json() if m is not None else None)
                      for h, m in sorted(self.heads.items())},
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def instance_map_via_polygons(mask: BinaryMask, conn: Connectivity = FOUR,
                              min_area: int = 0) -> InstanceMap:
    """Connected components, then the polygonize -> rasterize roundtrip."""
    imap = extract_instances(mask, conn)
    imap = filter_min_area(imap, min_area)
    polys = instances_to_polygons(imap)
    return polygons_to_instance_map(polys, mask.width, mask.height, geo=mask.geo)


def prediction_paths(pred_dir, entry: ManifestEntry, head: str) -> Path:
    return Path(pred_dir) / f"{entry.name}_{head}.fbt"


def evaluate(manifest: DatasetManifest, split: str, pred_dir,
             config: EvalConfig = EvalConfig()) -> MetricsReport:
    """Score a manifest split against a directory of probability rasters.

    Per example and head the prediction file is <name>_<head>.fbt, a
    single-band f32 raster in [0, 1]. Pixel F1/accuracy pool confusion
    counts over all labeled pixels; mIoU averages per-image; instance
    precision pools matched counts over the split.
    """
    entries = manifest.subset(split)
    if not entries:
        raise DataError(f"manifest has no '{split}' entries")
    missing = []
    for e in entries:
        for head in config.heads:
            p = prediction_paths(pred_dir, e, head)
            if not p.exists():
                missing.append(p)
    if missing:
        raise MissingPredictionsError(missing)

    pooled = {h: ConfusionCounts(0, 0, 0, 0) for h in config.heads}
    per_image = {h: [] for h in config.heads}
    inst_counts = {h: [0, 0, 0] for h in config.heads}  # tp, fp, fn

    for e in entries:
        nolabel = read_tile(e.nolabel)
        if not isinstance(nolabel, NoLabelMask):
            raise DataError(f"{e.nolabel} is not a no-label mask")
        gt_masks = {"border": read_tile(e.border), "interior": read_tile(e.interior)}
        for head in config.heads:
            gt = gt_masks[head]
            if not isinstance(gt, BinaryMask):
                raise DataError(f"ground truth for {e.name}/{head} is not a mask")
            prob = read_tile(prediction_paths(pred_dir, e, head))
            if not isinstance(prob, Raster):
                raise DataError(f"prediction for {e.name}/{head} is not a raster")
            pred = threshold(prob, config.threshold)
            c = pixel_confusion(pred, gt, nolabel)
            pooled[head] = pooled[head] + c
            per_image[head].append(c)

            pred_im = instance_map_via_polygons(pred, config.connectivity,
                                                config.min_instance_area)
            gt_im = instance_map_via_polygons(gt, config.connectivity)
            r = match_instances(pred_im, gt_im, nolabel, config.iou_threshold)
            inst_counts[head][0] += r.tp_count
            inst_counts[head][1] += r.fp_count
            inst_counts[head][2] += r.fn_count

    heads = {}
    for head in HEADS:
        if head not in config.heads:
            heads[head] = None
            continue
        c = pooled[head]
        tp_i, fp_i, fn_i = inst_counts[head]
        pooled_match = InstanceMatchResult(tp_i, fp_i, fn_i, (),
                                           threshold=config.iou_threshold)
        undefined = []
        if not f1_defined(c):
            undefined.append("f1")
        if not accuracy_defined(c):
            undefined.append("accuracy")
        if not precision_defined(pooled_match):
            undefined.append("p_at_iou")
        heads[head] = HeadMetrics(
            f1=f1(c),
            accuracy=accuracy(c),
            miou=miou(per_image[head]),
            p_at_iou=precision_at_iou(pooled_match),
            undefined=tuple(undefined),
        )
    return MetricsReport(heads=heads, n_images=len(entries),
                         threshold=config.threshold,
                         iou_threshold=config.iou_threshold)


def render_table(report: MetricsReport) -> str:
    """Plain-text table with one row per head and the four metric columns."""
    cols = ["F1", "acc", "mIoU", f"P@IoU>={report.iou_threshold:g}"]
    lines = ["head      " + "  ".join(f"{c:>12}" for c in cols)]
    for head in HEADS:
        m = report.heads.get(head)
        if m is None:
            lines.append(f"{head:<10}" + "  ".join(f"{'---':>12}" for _ in cols))
            continue
        vals = [m.f1, m.accuracy, m.miou, m.p_at_iou]
        names = ["f1", "accuracy", "miou", "p_at_iou"]
        cells = []
        for v, n in zip(vals, names):
            cell = f"{v:.4f}" + ("*" if n in m.undefined else "")
            cells.append(f"{cell:>12}")
        lines.append(f"{head:<10}" + "  ".join(cells))
    lines.append(f"n_images: {report.n_images}   threshold: {report.threshold:g}"
                 "   (* = undefined, reported as 0)")
    return "\n".join(lines)

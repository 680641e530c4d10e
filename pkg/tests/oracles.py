"""Shared independent oracles for the test suite.

These helpers deliberately avoid the library's own vectorized paths:
they count pixels with plain loops and test containment with ray
casting, so they can serve as ground truth for the fast code.
"""

import numpy as np
import pytest


def brute_confusion(pred, gt, nolabel):
    """Pixel-by-pixel confusion counting with explicit loops."""
    tp = fp = fn = tn = 0
    h, w = pred.shape
    for r in range(h):
        for c in range(w):
            if nolabel is not None and nolabel[r, c] != 1:
                continue
            p, g = pred[r, c], gt[r, c]
            if p == 1 and g == 1:
                tp += 1
            elif p == 1 and g == 0:
                fp += 1
            elif p == 0 and g == 1:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def brute_point_in_rings(x, y, rings):
    """Even-odd ray casting, independent of fieldseg.geometry."""
    crossings = 0
    for ring in rings:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if y1 == y2:
                continue
            if (y1 <= y < y2) or (y2 <= y < y1):
                t = (y - y1) / (y2 - y1)
                if x1 + t * (x2 - x1) > x:
                    crossings += 1
    return crossings % 2 == 1


def brute_overlap(map_a, map_b, id_a, id_b, valid=None):
    """Loop-based intersection/union pixel counts for one instance pair."""
    inter = a_area = b_area = 0
    h, w = map_a.shape
    for r in range(h):
        for c in range(w):
            if valid is not None and valid[r, c] != 1:
                continue
            in_a = map_a[r, c] == id_a
            in_b = map_b[r, c] == id_b
            a_area += in_a
            b_area += in_b
            inter += in_a and in_b
    return inter, a_area + b_area - inter


def random_blob_map(rng, h=24, w=24, n_blobs=4):
    """Instance map of random 4-connected blobs (rect seeds + random walks)."""
    from fieldseg.instances import extract_instances
    from fieldseg.raster import BinaryMask

    mask = np.zeros((h, w), dtype=np.uint8)
    for _ in range(n_blobs):
        r = int(rng.integers(0, h))
        c = int(rng.integers(0, w))
        steps = int(rng.integers(5, 40))
        for _ in range(steps):
            mask[r, c] = 1
            dr, dc = rng.choice([(-1, 0), (0, -1), (0, 1), (1, 0)])
            r = min(max(r + dr, 0), h - 1)
            c = min(max(c + dc, 0), w - 1)
    return extract_instances(BinaryMask(mask))

"""Fixtures for the trainer test suite.

Datasets are produced by the core `fieldseg` package (its synthetic
generator is the ground-truth authority) and handed to the trainer only
as files, mirroring how the two components interact in production.
"""

import sys
from pathlib import Path

import pytest

from fieldseg.pipeline import DatasetManifest, ManifestEntry, write_manifest
from fieldseg.synth import SceneSpec, generate
from fieldseg.tileio import write_tile


def make_dataset(root: Path, *, seeds, size=64, n_fields=2,
                 field_size_range=(12, 20), region="synthetic",
                 split="train", noise_std=0.0, name_prefix="scene"):
    """Writes FBT1 scenes + a manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, seed in enumerate(seeds):
        sc = generate(SceneSpec(seed=seed, width=size, height=size,
                                n_fields=n_fields,
                                field_size_range=field_size_range,
                                noise_std=noise_std))
        name = f"{name_prefix}{i:03d}"
        paths = {}
        for part, obj in (("tile", sc.tile), ("border", sc.border),
                          ("interior", sc.interior), ("nolabel", sc.nolabel)):
            p = root / f"{name}_{part}.fbt"
            write_tile(obj, p)
            paths[part] = str(p)
        sp = split(i) if callable(split) else split
        entries.append(ManifestEntry(name=name, region=region, split=sp,
                                     **paths))
    man = DatasetManifest(tuple(entries), seed=0)
    path = root / "manifest.jsonl"
    write_manifest(man, path)
    return path

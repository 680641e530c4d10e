"""JSONL dataset manifest reader (file contract shared with the core
toolkit; first line is a meta record, remaining lines are entries)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Entry:
    name: str
    tile: str
    border: str
    interior: str
    nolabel: str
    region: str
    split: str
    instances: str | None = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[Entry, ...]
    seed: int
    path: str

    def subset(self, split: str) -> tuple[Entry, ...]:
        return tuple(e for e in self.entries if e.split == split)

    def regions(self) -> set[str]:
        return {e.region for e in self.entries}


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty manifest")
    meta = json.loads(lines[0])
    if "__meta__" not in meta:
        raise ValueError(f"{path}: first line must be the meta record")
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        doc = json.loads(line)
        entries.append(Entry(
            name=doc["name"], tile=doc["tile"], border=doc["border"],
            interior=doc["interior"], nolabel=doc["nolabel"],
            region=doc["region"], split=doc["split"],
            instances=doc.get("instances")))
    return Manifest(tuple(entries), seed=int(meta.get("seed", 0)),
                    path=str(path))

"""End-to-end walkthrough on synthetic scenes.

Generates a small labeled dataset, runs the unsupervised Canny +
watershed baseline over the test split, and prints the metrics table.
Everything is seeded, so the numbers are identical on every run.

Run:  python3 demos/01_synthetic_end_to_end.py
"""

import tempfile
from pathlib import Path

from fieldseg.cli import main

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    scenes = root / "scenes"
    preds = root / "preds"

    # 1. Three 224x224 scenes, 8 fields each, mild sensor noise.
    assert main(["synth", "--out-dir", str(scenes), "--count", "3",
                 "--seed", "100", "--fields", "8", "--noise-std", "0.02"]) == 0

    # 2. Unsupervised delineation: edges -> relief -> watershed -> rules.
    assert main(["delineate", "--manifest", str(scenes / "manifest.jsonl"),
                 "--split", "test", "--out-dir", str(preds)]) == 0

    # 3. Score the border head against the exact synthetic ground truth.
    assert main(["evaluate", "--manifest", str(scenes / "manifest.jsonl"),
                 "--split", "test", "--pred-dir", str(preds),
                 "--heads", "border", "--format", "table"]) == 0

"""Training, transfer fine-tuning, and prediction export.

The loss is per-head pixel binary cross-entropy masked by the validity
raster: unlabeled pixels contribute exactly zero loss and zero gradient.
Heads are weighted 1:1. All file exchange uses the FBT1 and JSONL
manifest formats; prediction files are written atomically.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import fbt
from .manifest import Entry, Manifest, read_manifest
from .model import HEADS, STUNet


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite."""


@dataclass(frozen=True)
class Hyperparams:
    lr: float = 1e-3
    steps: int = 200
    batch_size: int = 2
    seed: int = 0
    val_every: int = 25


@dataclass(frozen=True)
class TransferPlan:
    pretrain_manifest: str
    test_manifest: str
    finetune_manifest: str | None = None
    freeze_policy: int = 2
    stage_lrs: tuple[float, ...] = (0.0, 0.0, 1e-4, 1e-4, 1e-4)
    head_lr: float = 1e-3

    def __post_init__(self):
        if not 0 <= self.freeze_policy <= 5:
            raise ValueError("freeze_policy must be within 0..5 encoder stages")
        if len(self.stage_lrs) != 5:
            raise ValueError("stage_lrs must give one rate per encoder stage")

    def validate_regions(self) -> None:
        """Manifests must not mix regions across roles."""
        roles = {"pretrain": read_manifest(self.pretrain_manifest).regions(),
                 "test": read_manifest(self.test_manifest).regions()}
        if self.finetune_manifest:
            roles["finetune"] = read_manifest(self.finetune_manifest).regions()
        seen: dict[str, str] = {}
        for role, regions in roles.items():
            for r in regions:
                if r in seen and seen[r] != role:
                    raise ValueError(
                        f"region '{r}' appears in both {seen[r]} and {role} "
                        f"manifests; transfer roles must be disjoint")
                seen[r] = role


def masked_bce(logits: torch.Tensor, target: torch.Tensor,
               valid: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy over valid pixels only.

    An all-invalid batch returns an exact zero that is connected to the
    graph, so gradients are exactly zero too.
    """
    per_pixel = nn.functional.binary_cross_entropy_with_logits(
        logits, target, reduction="none")
    masked = per_pixel * valid
    denom = valid.sum()
    if denom == 0:
        return masked.sum()  # exact 0, still differentiable
    return masked.sum() / denom


def _load_batch(entries: list[Entry], device) -> dict[str, torch.Tensor]:
    tiles, borders, interiors, valids = [], [], [], []
    for e in entries:
        tile = fbt.read_record(e.tile)
        if tile.kind != fbt.KIND_TILE:
            raise ValueError(f"{e.tile} is not a tile record")
        h, w, m, t = tile.data.shape
        # channels-last stacking, channel index = timestep * bands + band
        stacked = np.transpose(tile.data, (0, 1, 3, 2)).reshape(h, w, m * t)
        tiles.append(stacked.astype(np.float32))
        borders.append(fbt.read_record(e.border).data.astype(np.float32))
        interiors.append(fbt.read_record(e.interior).data.astype(np.float32))
        valids.append(fbt.read_record(e.nolabel).data.astype(np.float32))
    return {"tile": torch.from_numpy(np.stack(tiles)).to(device),
            "border": torch.from_numpy(np.stack(borders)).to(device),
            "interior": torch.from_numpy(np.stack(interiors)).to(device),
            "valid": torch.from_numpy(np.stack(valids)).to(device)}


def _batch_loss(model: STUNet, batch) -> torch.Tensor:
    out = model(batch["tile"], logits=True)
    return sum(masked_bce(out[h], batch[h], batch["valid"]) for h in HEADS)


def train(model: STUNet, manifest: Manifest, hp: Hyperparams,
          split: str = "train", val_split: str = "val",
          device: str = "cpu"):
    """Optimizes the masked BCE over the given split; keeps the weights
    of the best validation loss seen (falling back to training loss when
    the manifest has no validation entries). Returns (state_dict,
    history) where history is a list of per-step records."""
    entries = list(manifest.subset(split))
    if not entries:
        raise ValueError(f"manifest has no '{split}' entries")
    val_entries = list(manifest.subset(val_split))
    torch.manual_seed(hp.seed)
    model.to(device).train()
    params = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.Adam(params, lr=hp.lr)
    rng = np.random.default_rng(hp.seed)
    history = []
    best = (float("inf"), copy.deepcopy(model.state_dict()))
    for step in range(hp.steps):
        idx = rng.choice(len(entries), size=min(hp.batch_size, len(entries)),
                         replace=False)
        batch = _load_batch([entries[i] for i in idx], device)
        loss = _batch_loss(model, batch)
        if not torch.isfinite(loss):
            raise TrainingDiverged(
                f"non-finite loss {loss.item()} at step {step}; "
                f"lr={hp.lr}, batch entries="
                f"{[entries[i].name for i in idx]}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        rec = {"step": step, "loss": float(loss.item())}
        if val_entries and (step % hp.val_every == 0 or step == hp.steps - 1):
            model.eval()
            with torch.no_grad():
                vl = float(_batch_loss(model, _load_batch(val_entries,
                                                          device)).item())
            model.train()
            rec["val_loss"] = vl
            if vl < best[0]:
                best = (vl, copy.deepcopy(model.state_dict()))
        elif not val_entries and rec["loss"] < best[0]:
            best = (rec["loss"], copy.deepcopy(model.state_dict()))
        history.append(rec)
    model.load_state_dict(best[1])
    return best[1], history


def finetune(model: STUNet, weights, manifest: Manifest, plan: TransferPlan,
             hp: Hyperparams, split: str = "train", device: str = "cpu"):
    """Continues training from `weights` with the first
    plan.freeze_policy encoder stages frozen (parameters and batch-norm
    statistics bitwise untouched); per-stage learning rates from the
    plan apply to the rest."""
    model.load_state_dict(weights)
    model.to(device)
    stages = model.encoder_stages()
    frozen = stages[:plan.freeze_policy]
    for stage in frozen:
        for p in stage.parameters():
            p.requires_grad_(False)
        stage.eval()  # freeze batch-norm running statistics too

    groups = []
    for stage, lr in zip(stages[plan.freeze_policy:],
                         plan.stage_lrs[plan.freeze_policy:]):
        ps = [p for p in stage.parameters() if p.requires_grad]
        if ps and lr > 0:
            groups.append({"params": ps, "lr": lr})
    decoder = [model.up4, model.up3, model.up2, model.up1, model.up0,
               model.head_layers]
    groups.append({"params": [p for m in decoder for p in m.parameters()],
                   "lr": plan.head_lr})

    entries = list(manifest.subset(split))
    if not entries:
        raise ValueError(f"manifest has no '{split}' entries")
    torch.manual_seed(hp.seed)
    opt = torch.optim.Adam(groups)
    rng = np.random.default_rng(hp.seed)

    def set_mode():
        model.train()
        for stage in frozen:
            stage.eval()

    set_mode()
    for step in range(hp.steps):
        idx = rng.choice(len(entries), size=min(hp.batch_size, len(entries)),
                         replace=False)
        loss = _batch_loss(model, _load_batch([entries[i] for i in idx],
                                              device))
        if not torch.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at fine-tune step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
    model.eval()
    return copy.deepcopy(model.state_dict())


def predict(model: STUNet, weights, manifest: Manifest, out_dir: str | Path,
            split: str = "test", device: str = "cpu") -> list[Path]:
    """Writes two single-band f32 probability rasters per entry
    ({name}_border.fbt, {name}_interior.fbt) that the core evaluator
    consumes unmodified. Files are written atomically."""
    model.load_state_dict(weights)
    model.to(device).eval()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    entries = manifest.subset(split)
    if not entries:
        raise ValueError(f"manifest has no '{split}' entries")
    t0 = time.time()
    with torch.no_grad():
        for e in entries:
            batch = _load_batch([e], device)
            probs = model(batch["tile"])
            for head in HEADS:
                arr = probs[head][0].cpu().numpy().astype(np.float32)
                path = out / f"{e.name}_{head}.fbt"
                fbt.write_record(
                    fbt.Record(kind=fbt.KIND_RASTER, data=arr[:, :, None]),
                    path)
                written.append(path)
    meta = {"n_entries": len(entries), "split": split,
            "heads": list(HEADS), "seconds": round(time.time() - t0, 3),
            "backbone_depth": model.cfg.backbone_depth,
            "input_size": model.cfg.input_size}
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return written

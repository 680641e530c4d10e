"""Neural training companion for the fieldseg toolkit.

Exchanges data with the core package exclusively through FBT1 tile files
and JSONL manifests; never imports it.
"""

from .fbt import Record, read_record, write_record
from .manifest import Entry, Manifest, read_manifest
from .model import HEADS, ModelConfig, STUNet, build_model
from .train import (
    Hyperparams,
    TrainingDiverged,
    TransferPlan,
    finetune,
    masked_bce,
    predict,
    train,
)

__all__ = [
    "Record", "read_record", "write_record",
    "Entry", "Manifest", "read_manifest",
    "HEADS", "ModelConfig", "STUNet", "build_model",
    "Hyperparams", "TrainingDiverged", "TransferPlan",
    "finetune", "masked_bce", "predict", "train",
]

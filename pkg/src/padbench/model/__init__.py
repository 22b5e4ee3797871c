"""PADNet models on a MobileNetV2 backbone."""

from padbench.model.backbone import (
    Backbone,
    load_backbone,
    resolve_checkpoint,
    write_backbone_checkpoint,
)
from padbench.model.padnet import (
    FreezePlan,
    GradientCheck,
    HeadSpec,
    PADNet,
    PADNetSpec,
    TrainResult,
    Variant,
    attack_scores,
    build_padnet,
    head_gradient_check,
    load_model,
    predict,
    predict_manifest,
    save_model,
    state_checksum,
    train,
)
from padbench.model.preprocessing import load_image, preprocess
from padbench.model.training import EpochStats, Optimizer, TrainConfig

__all__ = [
    "Backbone",
    "EpochStats",
    "FreezePlan",
    "GradientCheck",
    "HeadSpec",
    "Optimizer",
    "PADNet",
    "PADNetSpec",
    "TrainConfig",
    "TrainResult",
    "Variant",
    "attack_scores",
    "build_padnet",
    "head_gradient_check",
    "load_backbone",
    "load_image",
    "load_model",
    "predict",
    "predict_manifest",
    "preprocess",
    "resolve_checkpoint",
    "save_model",
    "state_checksum",
    "train",
    "write_backbone_checkpoint",
]

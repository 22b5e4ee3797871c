"""PADNet: MobileNetV2 transfer learning for presentation attack detection.

Output unit 0 is bona fide, unit 1 is attack. Both units are independent
sigmoids; the attack score is ``s_attack / (s_attack + s_bona_fide)``.
"""

from __future__ import annotations

import copy
import hashlib
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

from padbench.dataset.manifest import Label, Manifest, SampleRecord
from padbench.errors import DomainError, FormatError
from padbench.metrics import GroundTruth
from padbench.model.backbone import (
    FEATURE_DIM,
    N_UNITS,
    Backbone,
    load_backbone,
    unit_of,
)
from padbench.model.preprocessing import PREPROCESSING, load_batch
from padbench.model.training import EpochStats, Optimizer, TrainConfig, fit, summed_bce
from padbench.scores import ScoreRecord

MODEL_SCHEMA_VERSION = 1
CLASS_INDEX = ("bona_fide", "attack")


class Variant(str, Enum):
    PADNET1 = "padnet1"
    PADNET2 = "padnet2"


@dataclass(frozen=True)
class FreezePlan:
    """Inclusive backbone unit ranges; ``frozen_range`` may be ``None`` (nothing frozen)."""

    frozen_range: tuple[int, int] | None
    trainable_range: tuple[int, int] | None

    def __post_init__(self) -> None:
        covered = []
        for r in (self.frozen_range, self.trainable_range):
            if r is None:
                continue
            lo, hi = r
            if not (1 <= lo <= hi <= N_UNITS):
                raise DomainError(f"layer range {r} outside 1..{N_UNITS}")
            covered.extend(range(lo, hi + 1))
        if sorted(covered) != list(range(1, N_UNITS + 1)):
            raise DomainError(f"freeze plan must cover layers 1..{N_UNITS} exactly once")
        if self.frozen_range and self.trainable_range and self.frozen_range[0] != 1:
            raise DomainError("frozen layers must precede trainable layers")

    @classmethod
    def freeze_through(cls, last_frozen: int) -> "FreezePlan":
        if not 0 <= last_frozen <= N_UNITS:
            raise DomainError(f"last frozen layer {last_frozen} outside 0..{N_UNITS}")
        frozen = (1, last_frozen) if last_frozen else None
        trainable = (last_frozen + 1, N_UNITS) if last_frozen < N_UNITS else None
        return cls(frozen, trainable)

    def is_frozen(self, unit: int) -> bool:
        return self.frozen_range is not None and self.frozen_range[0] <= unit <= self.frozen_range[1]


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class HeadSpec:
    layers: tuple[tuple[int, Activation], ...] = (
        (1024, Activation.RELU),
        (1024, Activation.RELU),
        (512, Activation.RELU),
        (2, Activation.SIGMOID),
    )

    def __post_init__(self) -> None:
        layers = tuple((int(w), Activation(a)) for w, a in self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise DomainError("head needs at least one layer")
        if any(w < 1 for w, _ in layers):
            raise DomainError("head layer widths must be positive")
        if layers[-1] != (2, Activation.SIGMOID):
            raise DomainError(f"final head layer must be 2-wide sigmoid, got {layers[-1]}")
        if any(a is not Activation.RELU for _, a in layers[:-1]):
            raise DomainError("hidden head layers must use relu")

    def parameter_count(self, in_features: int = FEATURE_DIM) -> int:
        total, prev = 0, in_features
        for width, _ in self.layers:
            total += prev * width + width
            prev = width
        return total


@dataclass(frozen=True)
class PADNetSpec:
    variant: Variant
    freeze_plan: FreezePlan
    head: HeadSpec = field(default_factory=HeadSpec)
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        expected = _VARIANT_FREEZE[self.variant]
        if self.freeze_plan != FreezePlan.freeze_through(expected):
            raise DomainError(f"{self.variant.value} freezes layers 1-{expected}, got {self.freeze_plan}")
        opt = _VARIANT_OPTIMIZER[self.variant]
        if self.train_config.optimizer is not opt:
            raise DomainError(f"{self.variant.value} uses the {opt.value} optimizer")

    @classmethod
    def padnet1(cls, **train_overrides) -> "PADNetSpec":
        cfg = TrainConfig(optimizer=Optimizer.ADAM, learning_rate=1e-3, batch_size=32, epochs=50)
        return cls(Variant.PADNET1, FreezePlan.freeze_through(26), HeadSpec(), _with(cfg, train_overrides))

    @classmethod
    def padnet2(cls, **train_overrides) -> "PADNetSpec":
        cfg = TrainConfig(
            optimizer=Optimizer.SGD_MOMENTUM, learning_rate=1e-4, momentum=0.9, batch_size=64, epochs=50
        )
        return cls(Variant.PADNET2, FreezePlan.freeze_through(16), HeadSpec(), _with(cfg, train_overrides))

    @classmethod
    def for_variant(cls, variant: str | Variant, **train_overrides) -> "PADNetSpec":
        v = Variant(variant)
        return cls.padnet1(**train_overrides) if v is Variant.PADNET1 else cls.padnet2(**train_overrides)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "freeze_plan": {
                "frozen_range": list(self.freeze_plan.frozen_range) if self.freeze_plan.frozen_range else None,
                "trainable_range": list(self.freeze_plan.trainable_range)
                if self.freeze_plan.trainable_range
                else None,
            },
            "head": [[w, a.value] for w, a in self.head.layers],
            "train_config": self.train_config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PADNetSpec":
        fp = d["freeze_plan"]
        return cls(
            d["variant"],
            FreezePlan(
                tuple(fp["frozen_range"]) if fp["frozen_range"] else None,
                tuple(fp["trainable_range"]) if fp["trainable_range"] else None,
            ),
            HeadSpec(tuple((w, a) for w, a in d["head"])),
            TrainConfig.from_dict(d["train_config"]),
        )


_VARIANT_FREEZE = {Variant.PADNET1: 26, Variant.PADNET2: 16}
_VARIANT_OPTIMIZER = {Variant.PADNET1: Optimizer.ADAM, Variant.PADNET2: Optimizer.SGD_MOMENTUM}


def _with(cfg: TrainConfig, overrides: dict) -> TrainConfig:
    return TrainConfig.from_dict({**cfg.to_dict(), **overrides}) if overrides else cfg


def build_head(head: HeadSpec, in_features: int = FEATURE_DIM) -> nn.Sequential:
    """Dense layers; the final sigmoid is left to the loss/scoring code (logits out)."""
    layers: list[nn.Module] = []
    prev = in_features
    for width, act in head.layers:
        layers.append(nn.Linear(prev, width))
        if act is Activation.RELU:
            layers.append(nn.ReLU())
        prev = width
    return nn.Sequential(*layers)


class PADNet(nn.Module):
    """Backbone + dense head. ``forward`` returns the two pre-sigmoid logits."""

    def __init__(self, spec: PADNetSpec, backbone: Backbone, backbone_meta: dict | None = None):
        super().__init__()
        self.spec = spec
        self.backbone = backbone
        self.head = build_head(spec.head)
        self.backbone_meta = dict(backbone_meta or {})
        for name, p in self.backbone.named_parameters():
            p.requires_grad_(not spec.freeze_plan.is_frozen(unit_of(name)))

    def train(self, mode: bool = True) -> "PADNet":
        super().train(mode)
        # backbone BatchNorm always uses its stored statistics
        self.backbone.eval()
        return self

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.backbone(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))

    def parameter_report(self) -> dict[str, int]:
        frozen = sum(p.numel() for p in self.backbone.parameters() if not p.requires_grad)
        trainable_bb = sum(p.numel() for p in self.backbone.parameters() if p.requires_grad)
        head = sum(p.numel() for p in self.head.parameters())
        return {
            "frozen": frozen,
            "trainable_backbone": trainable_bb,
            "head": head,
            "trainable": trainable_bb + head,
            "total": frozen + trainable_bb + head,
        }

    def frozen_parameters(self) -> dict[str, torch.Tensor]:
        return {n: p for n, p in self.backbone.named_parameters() if not p.requires_grad}


def build_padnet(spec: PADNetSpec, checkpoint: str | os.PathLike | None = None) -> PADNet:
    """Load the backbone checkpoint, attach the head and apply the freeze plan.

    Head weights are initialised from ``spec.train_config.seed``.
    """
    backbone, meta = load_backbone(checkpoint)
    torch.manual_seed(spec.train_config.seed)
    model = PADNet(spec, backbone, meta)
    model.eval()
    return model


def attack_scores(logits: torch.Tensor) -> torch.Tensor:
    """``s_attack / (s_attack + s_bona_fide)`` computed in log space."""
    return torch.sigmoid(F.logsigmoid(logits[:, 1]) - F.logsigmoid(logits[:, 0]))


def _targets(samples: Sequence[SampleRecord]) -> torch.Tensor:
    idx = torch.tensor([1 if s.label is Label.ATTACK else 0 for s in samples])
    return F.one_hot(idx, 2).to(torch.float32)


@dataclass
class TrainResult:
    model: PADNet
    history: list[EpochStats]


def train(model: PADNet, manifest: Manifest, config: TrainConfig | None = None) -> TrainResult:
    """Fine-tune ``model`` in place on ``manifest``."""
    config = config or model.spec.train_config
    labels = {s.label for s in manifest.samples}
    if labels != {Label.ATTACK, Label.BONA_FIDE}:
        raise DomainError("training manifest must contain both bona fide and attack samples")
    paths = [manifest.resolve(s) for s in manifest.samples]
    targets = _targets(manifest.samples)

    def correct(logits, y):
        return (attack_scores(logits) >= 0.5) == (y[:, 1] > 0.5)

    history = fit(model, paths, targets, config, correct)
    return TrainResult(model, history)


@torch.no_grad()
def predict(
    model: PADNet, samples: Sequence[SampleRecord], root: str | os.PathLike = ".", batch_size: int = 32
) -> list[ScoreRecord]:
    """Score samples in input order; paths are resolved against ``root``."""
    model.eval()
    out = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        x = load_batch([Path(root) / s.path for s in chunk])
        scores = attack_scores(model(x)).tolist()
        for s, score in zip(chunk, scores):
            gt = GroundTruth.ATTACK if s.label is Label.ATTACK else GroundTruth.BONA_FIDE
            out.append(ScoreRecord(s.path, gt, s.pais.abbreviation if s.pais else None, float(score)))
    return out


def predict_manifest(model: PADNet, manifest: Manifest, batch_size: int = 32) -> list[ScoreRecord]:
    return predict(model, list(manifest.samples), manifest.root, batch_size)


def save_model(model: PADNet, path: str | os.PathLike) -> None:
    blob = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "kind": "padnet",
        "spec": model.spec.to_dict(),
        "class_index": list(CLASS_INDEX),
        "preprocessing": PREPROCESSING,
        "backbone": {k: v for k, v in model.backbone_meta.items() if isinstance(v, (str, int, float))},
        "state_dict": model.state_dict(),
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(blob, path)


def read_model_file(path: str | os.PathLike) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file {path} does not exist")
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise FormatError(f"{path}: corrupt or unreadable model file ({exc})") from exc
    if not isinstance(blob, dict) or "schema_version" not in blob:
        raise FormatError(f"{path}: not a padbench model file")
    if blob["schema_version"] != MODEL_SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {blob['schema_version']!r}")
    return blob


def load_model(path: str | os.PathLike) -> PADNet:
    blob = read_model_file(path)
    if blob.get("kind") != "padnet":
        raise FormatError(f"{path}: expected a padnet model, found {blob.get('kind')!r}")
    if list(blob.get("class_index", [])) != list(CLASS_INDEX):
        raise FormatError(f"{path}: unexpected class index {blob.get('class_index')!r}")
    try:
        spec = PADNetSpec.from_dict(blob["spec"])
        model = PADNet(spec, Backbone(), blob.get("backbone"))
        model.load_state_dict(blob["state_dict"])
    except (KeyError, TypeError, ValueError, RuntimeError) as exc:
        raise FormatError(f"{path}: inconsistent model file ({exc})") from exc
    model.eval()
    return model


@dataclass(frozen=True)
class GradientCheck:
    parameter: str
    index: int
    backprop: float
    finite_difference: float

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.backprop), abs(self.finite_difference))
        return 0.0 if scale == 0.0 else abs(self.backprop - self.finite_difference) / scale


def head_gradient_check(
    model: PADNet, x: torch.Tensor, targets: torch.Tensor, n_params: int = 5, seed: int = 0, eps: float = 1e-6
) -> list[GradientCheck]:
    """Compare backpropagated head gradients with central finite differences.

    Runs on a float64 copy of ``model`` in inference mode. Parameters are
    drawn uniformly among head entries with a nonzero backpropagated
    gradient, so that the comparison is not trivially ``0 == 0``.
    """
    net = copy.deepcopy(model).double().eval()
    x = x.double()
    targets = targets.double()

    def loss_fn() -> torch.Tensor:
        return summed_bce(net(x), targets)

    net.zero_grad(set_to_none=True)
    loss_fn().backward()
    candidates = []
    for name, p in net.head.named_parameters():
        nz = torch.nonzero(p.grad.reshape(-1)).reshape(-1)
        candidates.extend((name, int(i)) for i in nz)
    if len(candidates) < n_params:
        raise DomainError("not enough head parameters with nonzero gradient")
    gen = torch.Generator().manual_seed(seed)
    picks = torch.randperm(len(candidates), generator=gen)[:n_params].tolist()
    params = dict(net.head.named_parameters())
    out = []
    with torch.no_grad():
        for k in picks:
            name, i = candidates[k]
            flat = params[name].view(-1)
            analytic = float(params[name].grad.view(-1)[i])
            orig = flat[i].item()
            flat[i] = orig + eps
            up = loss_fn().item()
            flat[i] = orig - eps
            down = loss_fn().item()
            flat[i] = orig
            out.append(GradientCheck(f"head.{name}", i, analytic, (up - down) / (2 * eps)))
    return out


def state_checksum(tensors: dict[str, torch.Tensor]) -> str:
    """SHA-256 over the raw bytes of the given tensors, in name order."""
    h = hashlib.sha256()
    for name in sorted(tensors):
        h.update(name.encode())
        h.update(tensors[name].detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()

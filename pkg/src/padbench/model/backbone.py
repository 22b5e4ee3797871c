"""MobileNetV2 feature extractor, its 28-unit layer index and checkpoint handling.

Freeze plans address the backbone through 28 contiguous *units*, numbered
from the input side:

* units 1-9   -- ``features.0`` (stem conv) through ``features.8``, one module each
* units 10-27 -- ``features.9`` through ``features.17``, each inverted-residual
  block split into its expansion+depthwise half and its projection half
* unit 28     -- ``features.18``, the final 1x1 convolution to 1280 channels
"""

from __future__ import annotations

import os
from pathlib import Path

import torch
from torch import nn
from torchvision.models import mobilenet_v2

from padbench.errors import ConfigurationError

N_UNITS = 28
FEATURE_DIM = 1280
CHECKPOINT_FORMAT = "padbench-backbone"
CHECKPOINT_SCHEMA = 1
DEFAULT_CHECKPOINT_NAME = "mobilenet_v2.pth"
# filename torchvision uses for its ImageNet weights
TORCHVISION_IMAGENET_NAME = "mobilenet_v2-b0353104.pth"
CACHE_ENV = "PADBENCH_CACHE"


def _unit_prefixes() -> list[tuple[str, ...]]:
    units: list[tuple[str, ...]] = [(f"features.{i}.",) for i in range(9)]
    for i in range(9, 18):
        units.append((f"features.{i}.conv.0.", f"features.{i}.conv.1."))
        units.append((f"features.{i}.conv.2.", f"features.{i}.conv.3."))
    units.append(("features.18.",))
    assert len(units) == N_UNITS
    return units


UNIT_PREFIXES = _unit_prefixes()


def unit_of(param_name: str) -> int:
    """1-based unit index of a backbone parameter name (``features....``)."""
    for idx, prefixes in enumerate(UNIT_PREFIXES, start=1):
        if param_name.startswith(prefixes):
            return idx
    raise KeyError(param_name)


class Backbone(nn.Module):
    """MobileNetV2 without its classifier: image batch -> 1280-d pooled features."""

    def __init__(self) -> None:
        super().__init__()
        self.features = mobilenet_v2(weights=None).features
        self.pool = nn.AdaptiveAvgPool2d(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.flatten(self.pool(self.features(x)), 1)

    def units(self) -> dict[int, list[tuple[str, nn.Parameter]]]:
        out: dict[int, list] = {i: [] for i in range(1, N_UNITS + 1)}
        for name, p in self.named_parameters():
            out[unit_of(name)].append((name, p))
        return out


def resolve_checkpoint(path: str | os.PathLike | None = None) -> Path:
    """Locate a backbone checkpoint: explicit path, else ``$PADBENCH_CACHE``."""
    if path is None:
        env = os.environ.get(CACHE_ENV)
        if not env:
            raise ConfigurationError(
                f"no backbone checkpoint given and ${CACHE_ENV} is unset; "
                "create one with `padbench backbone --out FILE`"
            )
        path = Path(env)
        if path.is_dir():
            for name in (DEFAULT_CHECKPOINT_NAME, TORCHVISION_IMAGENET_NAME):
                if (path / name).is_file():
                    return path / name
            raise ConfigurationError(f"no backbone checkpoint found in ${CACHE_ENV}={path}")
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"backbone checkpoint {path} does not exist")
    return path


def load_backbone(path: str | os.PathLike | None = None) -> tuple[Backbone, dict]:
    """Load a backbone checkpoint. Returns the module and the checkpoint metadata.

    Accepts files written by :func:`write_backbone_checkpoint` as well as a
    plain torchvision ``mobilenet_v2`` state dict (classifier keys ignored).
    """
    path = resolve_checkpoint(path)
    try:
        blob = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ConfigurationError(f"cannot read backbone checkpoint {path}: {exc}") from exc
    if isinstance(blob, dict) and blob.get("format") == CHECKPOINT_FORMAT:
        if blob.get("schema_version") != CHECKPOINT_SCHEMA:
            raise ConfigurationError(f"{path}: unsupported backbone schema {blob.get('schema_version')!r}")
        state, meta = blob["state_dict"], {k: v for k, v in blob.items() if k != "state_dict"}
    elif isinstance(blob, dict):
        state, meta = blob, {"format": "torchvision", "source": str(path.name)}
    else:
        raise ConfigurationError(f"{path}: not a backbone checkpoint")
    state = {k: v for k, v in state.items() if k.startswith("features.")}
    net = Backbone()
    missing, unexpected = net.load_state_dict(state, strict=False)
    if missing or unexpected:
        raise ConfigurationError(
            f"{path}: incompatible backbone weights (missing {len(missing)}, unexpected {len(unexpected)})"
        )
    meta["path"] = str(path)
    return net, meta


def _smooth_noise_batch(gen: torch.Generator, n: int, size: int) -> torch.Tensor:
    coarse = torch.rand(n, 3, 8, 8, generator=gen) * 2 - 1
    fine = torch.rand(n, 3, size, size, generator=gen) * 0.2 - 0.1
    up = nn.functional.interpolate(coarse, size=(size, size), mode="bilinear", align_corners=False)
    return (up + fine).clamp(-1, 1)


@torch.no_grad()
def calibrate_batchnorm(
    net: Backbone,
    seed: int,
    n_batches: int = 4,
    batch: int = 8,
    size: int = 224,
    final_shift: float = -1.5,
) -> None:
    """Set BatchNorm running statistics from smooth random images.

    Every layer then sees roughly zero-mean, unit-variance pre-activations.
    ``final_shift`` moves the last BatchNorm's bias so the pooled 1280-d
    output is sparse (about 7% of units active at -1.5), as in trained
    networks; dense non-negative features make the first optimiser steps on
    the head shift all units coherently.
    """
    gen = torch.Generator().manual_seed(seed)
    bns = [m for m in net.modules() if isinstance(m, nn.BatchNorm2d)]
    saved = [m.momentum for m in bns]
    for m in bns:
        m.reset_running_stats()
        m.momentum = None
    net.train()
    for _ in range(n_batches):
        net(_smooth_noise_batch(gen, batch, size))
    for m, mom in zip(bns, saved):
        m.momentum = mom
    net.features[18][1].bias.fill_(final_shift)
    net.eval()


def write_backbone_checkpoint(path: str | os.PathLike, seed: int = 0, source: str = "random") -> Path:
    """Write a backbone checkpoint.

    ``source="imagenet"`` fetches torchvision's ImageNet weights (network
    access required). ``source="random"`` writes a seeded, BatchNorm-calibrated
    random initialisation, useful where pretrained weights are unavailable.
    """
    path = Path(path)
    if source == "imagenet":
        from torchvision.models import MobileNet_V2_Weights

        try:
            full = mobilenet_v2(weights=MobileNet_V2_Weights.IMAGENET1K_V1)
        except Exception as exc:
            raise ConfigurationError(f"could not fetch ImageNet weights: {exc}") from exc
        net = Backbone()
        net.features.load_state_dict(full.features.state_dict())
    elif source == "random":
        torch.manual_seed(seed)
        net = Backbone()
        calibrate_batchnorm(net, seed)
    else:
        raise ConfigurationError(f"unknown backbone source {source!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "schema_version": CHECKPOINT_SCHEMA,
            "arch": "mobilenet_v2",
            "source": source,
            "seed": seed,
            "state_dict": net.state_dict(),
        },
        path,
    )
    return path


__all__ = [
    "Backbone",
    "CACHE_ENV",
    "FEATURE_DIM",
    "N_UNITS",
    "UNIT_PREFIXES",
    "load_backbone",
    "resolve_checkpoint",
    "unit_of",
    "write_backbone_checkpoint",
]

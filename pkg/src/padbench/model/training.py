"""Optimisation loop shared by the PAD classifier and the 2-D embedder."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

from padbench.errors import DomainError
from padbench.model.preprocessing import INPUT_SIZE, load_batch

log = logging.getLogger(__name__)


class Optimizer(str, Enum):
    ADAM = "adam"
    SGD_MOMENTUM = "sgd_momentum"


@dataclass(frozen=True)
class TrainConfig:
    optimizer: Optimizer = Optimizer.ADAM
    learning_rate: float = 1e-3
    momentum: float = 0.0
    batch_size: int = 32
    epochs: int = 50
    input_size: tuple[int, int, int] = INPUT_SIZE
    seed: int = 0
    # Adam moment decay rates; unused by SGD
    betas: tuple[float, float] = field(default=(0.9, 0.999))

    def __post_init__(self) -> None:
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        object.__setattr__(self, "input_size", tuple(self.input_size))
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise DomainError("batch_size and epochs must be positive")
        if self.input_size != INPUT_SIZE:
            raise DomainError(f"input_size is fixed at {INPUT_SIZE}, got {self.input_size}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["optimizer"] = self.optimizer.value
        d["input_size"] = list(self.input_size)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def make_optimizer(params: list[nn.Parameter], config: TrainConfig) -> torch.optim.Optimizer:
    if config.optimizer is Optimizer.ADAM:
        return torch.optim.Adam(params, lr=config.learning_rate, betas=config.betas)
    return torch.optim.SGD(params, lr=config.learning_rate, momentum=config.momentum)


def summed_bce(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy summed over the sigmoid units, averaged over the batch."""
    return F.binary_cross_entropy_with_logits(logits, targets, reduction="none").sum(dim=1).mean()


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def fit(
    model: nn.Module,
    paths: Sequence[Path],
    targets: torch.Tensor,
    config: TrainConfig,
    correct: Callable[[torch.Tensor, torch.Tensor], torch.Tensor],
) -> list[EpochStats]:
    """Train ``model`` in place on images at ``paths`` with one-hot ``targets``.

    ``correct(logits, targets)`` returns a boolean tensor marking correct
    predictions; accuracy is accumulated over each epoch's forward passes.
    """
    params = [p for p in model.parameters() if p.requires_grad]
    if not params:
        raise DomainError("model has no trainable parameters")
    opt = make_optimizer(params, config)
    gen = torch.Generator().manual_seed(config.seed)
    history = []
    n = len(paths)
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(n, generator=gen).tolist()
        total_loss, n_correct = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x = load_batch([paths[i] for i in idx])
            y = targets[idx]
            opt.zero_grad(set_to_none=True)
            logits = model(x)
            loss = summed_bce(logits, y)
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(idx)
            n_correct += int(correct(logits.detach(), y).sum())
        stats = EpochStats(epoch, total_loss / n, n_correct / n)
        log.info("epoch %d/%d loss %.4f accuracy %.4f", epoch, config.epochs, stats.loss, stats.accuracy)
        history.append(stats)
    model.eval()
    return history

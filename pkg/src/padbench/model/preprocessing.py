"""Image decoding and network input preparation."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from padbench.errors import DomainError

INPUT_SIZE = (224, 224, 3)
# pixel scaling convention of the MobileNetV2 pretraining: [0, 255] -> [-1, 1]
PREPROCESSING = {"resize": "bilinear-antialias", "size": list(INPUT_SIZE), "scale": "minus_one_to_one"}


def load_image(path: str | Path) -> np.ndarray:
    """Decode an image file to a uint8 array. Colour images come back HxWx3."""
    try:
        with Image.open(path) as im:
            if im.mode in ("L", "I", "I;16", "F", "1"):
                return np.asarray(im)
            return np.asarray(im.convert("RGB"))
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc


def preprocess(image: np.ndarray, size: tuple[int, int] = INPUT_SIZE[:2]) -> np.ndarray:
    """Resize an RGB image bilinearly to ``size`` and scale it to [-1, 1].

    Returns a float32 array of shape ``(H, W, 3)``.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DomainError(f"expected an HxWx3 RGB image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DomainError("empty image")
    x = torch.from_numpy(arr.astype(np.float32)).permute(2, 0, 1)[None]
    if tuple(arr.shape[:2]) != tuple(size):
        x = F.interpolate(x, size=tuple(size), mode="bilinear", align_corners=False, antialias=True)
    x = x / 127.5 - 1.0
    return x[0].permute(1, 2, 0).contiguous().numpy()


def to_batch(images: list[np.ndarray]) -> torch.Tensor:
    """Stack preprocessed HWC arrays into an NCHW tensor."""
    return torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2).contiguous()


def load_batch(paths: list[Path]) -> torch.Tensor:
    return to_batch([preprocess(load_image(p)) for p in paths])

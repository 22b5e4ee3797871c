"""Deterministic synthetic ear-capture fixtures.

Bona fide images are smooth procedural "ear" shapes on a skin-toned
background. Display attacks re-render a subject's ear with a moire grating
and a screen colour cast; print attacks add a halftone dot screen and
desaturate. The two classes are separable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from padbench.dataset.manifest import Label, Manifest, SampleRecord
from padbench.dataset.taxonomy import (
    BONA_FIDE_DEVICE,
    Position,
    Side,
    attack_filename,
    codes_for,
    pais_from_codes,
)
from padbench.errors import DomainError

_POSITIONS = [p for p in Position if p is not Position.UNKNOWN]
_SIDE_TOKENS = {Side.LEFT: "L", Side.RIGHT: "R"}

# moire spatial frequency (cycles per image width) and angle per representor code
_GRATINGS = {"4K": (9.0, 0.35), "3D": (13.0, 1.1)}
# RGB colour cast per capture device code
_CASTS = {"SGA7": (-12.0, 0.0, 14.0), "SGS9": (-4.0, -8.0, 18.0), "N1020": (6.0, -6.0, 8.0)}


@dataclass(frozen=True)
class FixtureConfig:
    n_subjects: int = 2
    n_bonafide_per_subject: int = 4
    pais_list: tuple[str, ...] = ("Dell-GA7",)
    n_attack_per_pais: int = 4
    image_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pais_list", tuple(self.pais_list))
        for name in ("n_subjects", "n_bonafide_per_subject", "n_attack_per_pais"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if not self.pais_list:
            raise DomainError("pais_list must name at least one PAIS")
        if len(set(self.pais_list)) != len(self.pais_list):
            raise DomainError("pais_list contains duplicates")
        if self.image_size < 32:
            raise DomainError(f"image_size must be >= 32, got {self.image_size}")
        for abbr in self.pais_list:
            codes_for(abbr)


def _subject_params(seed: int, subject: int) -> dict:
    rng = np.random.default_rng([seed, 0, subject])
    return {
        "skin": rng.uniform([170, 115, 95], [230, 165, 135]),
        "ear_shade": rng.uniform(0.72, 0.86),
        "radii": rng.uniform([0.22, 0.32], [0.3, 0.42]),
        "tilt": rng.uniform(-0.4, 0.4),
    }


def render_bona_fide(size: int, params: dict, rng: np.random.Generator) -> np.ndarray:
    """Float RGB image in [0, 255] with shape (size, size, 3)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    cx, cy = 0.5 + rng.uniform(-0.06, 0.06, size=2)
    rx, ry = params["radii"] * rng.uniform(0.95, 1.05, size=2)
    t = params["tilt"] + rng.uniform(-0.1, 0.1)
    u = (xx - cx) * np.cos(t) + (yy - cy) * np.sin(t)
    v = -(xx - cx) * np.sin(t) + (yy - cy) * np.cos(t)
    r = (u / rx) ** 2 + (v / ry) ** 2
    ear = 1.0 / (1.0 + np.exp((r - 1.0) * 12.0))
    concha = 1.0 / (1.0 + np.exp((r - 0.3) * 18.0))
    shade = 1.0 - (1.0 - params["ear_shade"]) * ear - 0.12 * concha
    light = 0.92 + 0.12 * (1.0 - yy) + 0.03 * np.sin(2 * np.pi * (xx * rng.uniform(0.5, 1.5) + rng.uniform()))
    img = params["skin"][None, None, :] * (shade * light)[..., None]
    img += rng.normal(0.0, 2.0, size=img.shape)
    return img


def _moire(size: int, freq: float, angle: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    a = np.sin(2 * np.pi * freq * (xx * np.cos(angle) + yy * np.sin(angle)))
    b = np.sin(2 * np.pi * freq * 1.07 * (xx * np.cos(angle + 0.08) + yy * np.sin(angle + 0.08)))
    return (a + b) / 2


def _halftone(img: np.ndarray, period: float = 4.0) -> np.ndarray:
    size = img.shape[0]
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    screen = (np.cos(2 * np.pi * xx / period) + np.cos(2 * np.pi * yy / period)) / 4 + 0.5
    lum = img.mean(axis=2, keepdims=True)
    gray = 0.4 * img + 0.6 * lum
    dots = screen[..., None] > (lum / 255.0)
    # ink dots on bright paper
    return np.where(dots, gray * 0.35, np.minimum(gray * 0.9 + 60, 255))


def render_attack(base: np.ndarray, capture_code: str, representor_code: str) -> np.ndarray:
    img = base.copy()
    if representor_code in _GRATINGS:
        freq, angle = _GRATINGS[representor_code]
        # backlit screen: lifted blacks, reduced contrast, strong moire
        img = img * 0.7 + 70.0 + 60.0 * _moire(img.shape[0], freq, angle)[..., None]
    else:
        img = _halftone(img)
    img = img + 2.0 * np.asarray(_CASTS[capture_code])[None, None, :]
    return img


def _to_png(img: np.ndarray, path: Path) -> None:
    arr = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG", optimize=False)


def synthesize_fixture(config: FixtureConfig, out_dir: str | Path) -> Manifest:
    """Write the fixture images to ``out_dir`` and return the ground-truth manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    size, seed = config.image_size, config.seed
    params = {s: _subject_params(seed, s) for s in range(1, config.n_subjects + 1)}
    samples = []

    for s in range(1, config.n_subjects + 1):
        for k in range(config.n_bonafide_per_subject):
            side = Side.LEFT if k % 2 == 0 else Side.RIGHT
            pos = _POSITIONS[(k // 2) % len(_POSITIONS)]
            sid = f"{s:03d}"
            name = f"subject{sid}_{_SIDE_TOKENS[side]}_{pos.value}_{k:02d}.png"
            rng = np.random.default_rng([seed, 1, s, k])
            _to_png(render_bona_fide(size, params[s], rng), out / name)
            samples.append(SampleRecord(name, Label.BONA_FIDE, BONA_FIDE_DEVICE, sid, side, pos))

    for pi, abbr in enumerate(config.pais_list):
        cap, rep = codes_for(abbr)
        pais = pais_from_codes(cap, rep)
        for k in range(config.n_attack_per_pais):
            s = k % config.n_subjects + 1
            sid = f"{s:03d}"
            name = attack_filename(abbr, f"subject{sid}", f"{k:04d}")
            rng = np.random.default_rng([seed, 2 + pi, s, k])
            base = render_bona_fide(size, params[s], rng)
            _to_png(render_attack(base, cap, rep), out / name)
            samples.append(SampleRecord(name, Label.ATTACK, pais.capture_device, sid, pais=pais))

    catalog = sorted({s.pais for s in samples if s.pais}, key=lambda p: p.abbreviation)
    samples.sort(key=lambda r: r.path)
    return Manifest(str(out), tuple(samples), tuple(catalog))


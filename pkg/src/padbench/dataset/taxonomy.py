"""Attack-instrument taxonomy and the capture filename grammar.

Attack filenames follow ``Cap_<CAP>_Disp_<DISP>_...`` (display/replay) or
``Cap_<CAP>_Print_<PRN>_...`` (photo print). Any name without the ``Cap_``
prefix is a bona fide capture. The remaining underscore-separated tokens may
carry ``subject<ID>``, a side (``L``/``R``) and a position word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import PurePath

from padbench.errors import DomainError, ParseError


class AttackType(str, Enum):
    DISPLAY = "display"
    PHOTO_PRINT = "photo_print"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"


class Position(str, Enum):
    UP = "up"
    DOWN = "down"
    FRONT = "front"
    FORWARD = "forward"
    BACK = "back"
    UNKNOWN = "unknown"


# code -> (full device name, abbreviation suffix)
CAPTURE_DEVICES = {
    "SGA7": ("Samsung Galaxy A7", "GA7"),
    "SGS9": ("Samsung Galaxy S9", "GS9"),
    "N1020": ("Nokia Lumia 1020", "NL1020"),
}

# code -> (full device name, attack type, abbreviation prefix)
REPRESENTORS = {
    "4K": ("Dell UltraSharp 32 Ultra HD 4K Monitor", AttackType.DISPLAY, "Dell"),
    "3D": ("SAMSUNG C27JG50QQUX monitor", AttackType.DISPLAY, "S3D"),
    "MFC": ("Brother MFC-9340CDW - multifunction printer", AttackType.PHOTO_PRINT, "Print"),
}

_KIND_TOKEN = {"Disp": AttackType.DISPLAY, "Print": AttackType.PHOTO_PRINT}
_TOKEN_FOR_KIND = {v: k for k, v in _KIND_TOKEN.items()}

BONA_FIDE_DEVICE = "Samsung Galaxy A7"
PRINTER_KEYWORDS = ("printer",)


@dataclass(frozen=True)
class PAISDescriptor:
    """One presentation attack instrument species."""

    attack_type: AttackType
    representor: str
    capture_device: str
    abbreviation: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "attack_type", AttackType(self.attack_type))
        if not self.abbreviation:
            raise DomainError("PAIS abbreviation must be non-empty")
        if self.attack_type is AttackType.PHOTO_PRINT and not is_printer(self.representor):
            raise DomainError(f"photo-print PAIS {self.abbreviation!r} needs a printer representor")

    def to_dict(self) -> dict:
        return {
            "attack_type": self.attack_type.value,
            "representor": self.representor,
            "capture_device": self.capture_device,
            "abbreviation": self.abbreviation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PAISDescriptor":
        return cls(d["attack_type"], d["representor"], d["capture_device"], d["abbreviation"])


def is_printer(device: str) -> bool:
    return any(k in device.lower() for k in PRINTER_KEYWORDS)


def pais_from_codes(capture_code: str, representor_code: str) -> PAISDescriptor:
    if capture_code not in CAPTURE_DEVICES:
        raise ParseError(f"unknown capture device code {capture_code!r}")
    if representor_code not in REPRESENTORS:
        raise ParseError(f"unknown representor code {representor_code!r}")
    cap_name, cap_suffix = CAPTURE_DEVICES[capture_code]
    rep_name, kind, rep_prefix = REPRESENTORS[representor_code]
    return PAISDescriptor(kind, rep_name, cap_name, f"{rep_prefix}-{cap_suffix}")


def codes_for(abbreviation: str) -> tuple[str, str]:
    """Inverse of :func:`pais_from_codes`: abbreviation -> (capture code, representor code)."""
    for cap_code, (_, suffix) in CAPTURE_DEVICES.items():
        for rep_code, (_, _, prefix) in REPRESENTORS.items():
            if f"{prefix}-{suffix}" == abbreviation:
                return cap_code, rep_code
    raise DomainError(f"no device codes produce abbreviation {abbreviation!r}")


def attack_filename(abbreviation: str, *tokens: str, ext: str = ".png") -> str:
    cap, rep = codes_for(abbreviation)
    kind = REPRESENTORS[rep][1]
    parts = ["Cap", cap, _TOKEN_FOR_KIND[kind], rep, *tokens]
    return "_".join(parts) + ext


@dataclass(frozen=True)
class FilenameInfo:
    """Metadata recoverable from a capture filename."""

    pais: PAISDescriptor | None
    subject_id: str | None = None
    side: Side = Side.UNKNOWN
    position: Position = Position.UNKNOWN

    @property
    def is_attack(self) -> bool:
        return self.pais is not None

    @property
    def capture_device(self) -> str:
        return self.pais.capture_device if self.pais else BONA_FIDE_DEVICE


_ATTACK_RE = re.compile(r"^Cap_(?P<cap>[^_]+)_(?P<kind>[^_]+)_(?P<rep>[^_]+)(?:_(?P<rest>.*))?$")
_SUBJECT_RE = re.compile(r"^subject(?P<id>[A-Za-z0-9]+)$")
_SIDES = {"L": Side.LEFT, "R": Side.RIGHT}
_POSITIONS = {p.value: p for p in Position if p is not Position.UNKNOWN}


def _parse_tokens(tokens: list[str]) -> tuple[str | None, Side, Position]:
    subject, side, position = None, Side.UNKNOWN, Position.UNKNOWN
    for tok in tokens:
        m = _SUBJECT_RE.match(tok)
        if m and subject is None:
            subject = m["id"]
        elif tok in _SIDES and side is Side.UNKNOWN:
            side = _SIDES[tok]
        elif tok.lower() in _POSITIONS and position is Position.UNKNOWN:
            position = _POSITIONS[tok.lower()]
    return subject, side, position


def parse_filename(name: str) -> FilenameInfo:
    """Parse a capture filename (directory components are ignored).

    >>> parse_filename("Cap_N1020_Disp_3D_0012.jpg").pais.abbreviation
    'S3D-NL1020'
    >>> parse_filename("subject042_L_front_03.jpg").is_attack
    False
    """
    if not name:
        raise ParseError("empty filename")
    stem = PurePath(name).stem
    if not stem.startswith("Cap_"):
        return FilenameInfo(None, *_parse_tokens(stem.split("_")))
    m = _ATTACK_RE.match(stem)
    if m is None:
        raise ParseError(f"malformed attack filename {name!r}")
    kind = _KIND_TOKEN.get(m["kind"])
    if kind is None:
        raise ParseError(f"unknown attack kind token {m['kind']!r} in {name!r}")
    pais = pais_from_codes(m["cap"], m["rep"])
    if pais.attack_type is not kind:
        raise ParseError(
            f"representor {m['rep']!r} is not a {kind.value} device (in {name!r})"
        )
    rest = m["rest"].split("_") if m["rest"] else []
    return FilenameInfo(pais, *_parse_tokens(rest))


# Fake-database composition as published: PAIS -> image count, plus the
# claimed per-representor totals.
PUBLISHED_PAIS_COUNTS = {
    "Dell-GA7": 2134,
    "Dell-GS9": 2827,
    "Dell-NL1020": 101,
    "S3D-GA7": 16,
    "S3D-GS9": 2026,
    "S3D-NL1020": 1369,
    "Print-GA7": 189,
}
PUBLISHED_REPRESENTOR_TOTALS = {
    REPRESENTORS["4K"][0]: 5062,
    REPRESENTORS["3D"][0]: 3411,
    REPRESENTORS["MFC"][0]: 189,
}


def published_catalog() -> list[PAISDescriptor]:
    return [pais_from_codes(*codes_for(a)) for a in PUBLISHED_PAIS_COUNTS]

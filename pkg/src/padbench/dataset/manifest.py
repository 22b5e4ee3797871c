"""Sample manifests: construction from a directory, validation and persistence."""

from __future__ import annotations

import json
import os
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from padbench.dataset.taxonomy import (
    PUBLISHED_PAIS_COUNTS,
    PUBLISHED_REPRESENTOR_TOTALS,
    PAISDescriptor,
    Position,
    Side,
    attack_filename,
    is_printer,
    parse_filename,
    published_catalog,
)
from padbench.errors import DomainError, FormatError, ParseError
from padbench.metrics import GroundTruth

SCHEMA_VERSION = 1
IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")
BONA_FIDE_KEY = "bona_fide"

Label = GroundTruth


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: Label
    capture_device: str
    subject_id: str | None = None
    side: Side = Side.UNKNOWN
    position: Position = Position.UNKNOWN
    pais: PAISDescriptor | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "label", Label.parse(self.label))
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "position", Position(self.position))
        if (self.label is Label.ATTACK) != (self.pais is not None):
            raise DomainError(f"{self.path}: label {self.label.value} inconsistent with PAIS")

    @property
    def group(self) -> str:
        return self.pais.abbreviation if self.pais else BONA_FIDE_KEY

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "label": self.label.value,
            "capture_device": self.capture_device,
            "subject_id": self.subject_id,
            "side": self.side.value,
            "position": self.position.value,
            "pais": self.pais.abbreviation if self.pais else None,
        }


@dataclass(frozen=True)
class Manifest:
    """An immutable collection of samples rooted at ``root``.

    Sample paths are relative to ``root``. ``claimed_totals`` holds
    externally declared per-representor image totals to audit against.
    """

    root: str
    samples: tuple[SampleRecord, ...]
    pais_catalog: tuple[PAISDescriptor, ...]
    claimed_totals: Mapping[str, int] = field(default_factory=dict)
    skipped: tuple[tuple[str, str], ...] = ()

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(s.group for s in self.samples)
        return {k: c[k] for k in sorted(c)}

    @property
    def subjects(self) -> list[str]:
        return sorted({s.subject_id for s in self.samples if s.label is Label.BONA_FIDE and s.subject_id})

    def pais(self, abbreviation: str) -> PAISDescriptor | None:
        return next((p for p in self.pais_catalog if p.abbreviation == abbreviation), None)

    def resolve(self, sample: SampleRecord) -> Path:
        return Path(self.root) / sample.path

    def subset(self, samples: Iterable[SampleRecord]) -> "Manifest":
        samples = tuple(samples)
        used = {s.pais.abbreviation for s in samples if s.pais}
        return Manifest(
            self.root,
            samples,
            tuple(p for p in self.pais_catalog if p.abbreviation in used),
            {},
            (),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "root": self.root,
            "pais_catalog": [p.to_dict() for p in self.pais_catalog],
            "claimed_totals": dict(sorted(self.claimed_totals.items())),
            "counts": self.counts,
            "samples": [s.to_dict() for s in self.samples],
            "skipped": [{"path": p, "reason": r} for p, r in self.skipped],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Manifest":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise FormatError(f"unsupported manifest schema_version {d.get('schema_version')!r}")
        try:
            catalog = tuple(PAISDescriptor.from_dict(p) for p in d["pais_catalog"])
            by_abbr = {p.abbreviation: p for p in catalog}
            samples = []
            for s in d["samples"]:
                abbr = s.get("pais")
                if abbr is not None and abbr not in by_abbr:
                    raise FormatError(f"sample {s['path']!r} references unknown PAIS {abbr!r}")
                samples.append(
                    SampleRecord(
                        path=s["path"],
                        label=s["label"],
                        capture_device=s["capture_device"],
                        subject_id=s.get("subject_id"),
                        side=s.get("side", "unknown"),
                        position=s.get("position", "unknown"),
                        pais=by_abbr.get(abbr) if abbr else None,
                    )
                )
            m = cls(
                d["root"],
                tuple(samples),
                catalog,
                dict(d.get("claimed_totals", {})),
                tuple((k["path"], k["reason"]) for k in d.get("skipped", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed manifest: {exc}") from exc
        if "counts" in d and d["counts"] != m.counts:
            raise FormatError("stored counts disagree with the samples they summarise")
        return m


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    text = json.dumps(manifest.to_dict(), indent=2, sort_keys=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def load_manifest(path: str | Path) -> Manifest:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return Manifest.from_dict(data)


def record_from_name(rel_path: str) -> SampleRecord:
    info = parse_filename(Path(rel_path).name)
    return SampleRecord(
        path=rel_path,
        label=Label.ATTACK if info.is_attack else Label.BONA_FIDE,
        capture_device=info.capture_device,
        subject_id=info.subject_id,
        side=info.side,
        position=info.position,
        pais=info.pais,
    )


def build_manifest(root: str | Path, claimed_totals: Mapping[str, int] | None = None) -> Manifest:
    """Scan ``root`` recursively and build a manifest from the filenames.

    Files whose names fail the attack grammar are recorded in
    ``Manifest.skipped`` together with the parse error.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist or is not a directory")
    samples, skipped = [], []
    catalog: dict[str, PAISDescriptor] = {}
    for dirpath, _, filenames in os.walk(root):
        for fn in filenames:
            if not fn.lower().endswith(IMAGE_EXTENSIONS):
                continue
            rel = Path(dirpath, fn).relative_to(root).as_posix()
            try:
                rec = record_from_name(rel)
            except ParseError as exc:
                skipped.append((rel, str(exc)))
                continue
            if rec.pais:
                catalog.setdefault(rec.pais.abbreviation, rec.pais)
            samples.append(rec)
    samples.sort(key=lambda s: s.path)
    skipped.sort()
    if not samples:
        raise DomainError(f"no recognised image samples under {root} ({len(skipped)} skipped)")
    return Manifest(
        str(root),
        tuple(samples),
        tuple(catalog[k] for k in sorted(catalog)),
        dict(claimed_totals or {}),
        tuple(skipped),
    )


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def check_group_total(group: str, counts: Mapping[str, int], claimed: int) -> Finding | None:
    """Compare a claimed group total against the sum of its member counts."""
    total = sum(counts.values())
    if total != claimed:
        parts = " + ".join(str(counts[k]) for k in sorted(counts))
        return Finding("count mismatch", f"{group}: {parts} = {total}, claimed {claimed}")
    return None


def validate_manifest(manifest: Manifest, check_files: bool = True) -> list[Finding]:
    """Return a list of findings; an empty list means the manifest passed."""
    findings = []
    abbrs = [p.abbreviation for p in manifest.pais_catalog]
    for dup in sorted(a for a, n in Counter(abbrs).items() if n > 1):
        findings.append(Finding("duplicate PAIS", f"abbreviation {dup!r} appears more than once"))
    for p in manifest.pais_catalog:
        if p.attack_type.value == "photo_print" and not is_printer(p.representor):
            findings.append(Finding("taxonomy", f"{p.abbreviation}: print attack without printer"))
    catalog = set(manifest.pais_catalog)
    for s in manifest.samples:
        if s.pais is not None and s.pais not in catalog:
            findings.append(Finding("unknown PAIS", f"{s.path}: {s.pais.abbreviation} not in catalog"))
        if s.label is Label.BONA_FIDE and not s.subject_id:
            findings.append(Finding("missing subject", f"{s.path}: bona fide sample without subject_id"))
        if check_files and not os.access(manifest.resolve(s), os.R_OK):
            findings.append(Finding("unreadable", f"{s.path}: file missing or unreadable"))

    per_rep: dict[str, dict[str, int]] = {}
    for s in manifest.samples:
        if s.pais:
            grp = per_rep.setdefault(s.pais.representor, {})
            grp[s.capture_device] = grp.get(s.capture_device, 0) + 1
    for rep, claimed in sorted(manifest.claimed_totals.items()):
        f = check_group_total(rep, per_rep.get(rep, {}), claimed)
        if f:
            findings.append(f)
    return findings


def published_manifest_stub() -> Manifest:
    """Manifest with the published fake-database counts (paths are placeholders)."""
    catalog = published_catalog()
    samples = []
    for p in catalog:
        for i in range(PUBLISHED_PAIS_COUNTS[p.abbreviation]):
            samples.append(record_from_name(attack_filename(p.abbreviation, f"{i:05d}", ext=".jpg")))
    return Manifest("<stub>", tuple(samples), tuple(catalog), dict(PUBLISHED_REPRESENTOR_TOTALS))

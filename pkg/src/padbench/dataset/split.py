"""Train/test partitioning: subject-disjoint and leave-one-PAIS-out."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from operator import attrgetter

from padbench.dataset.manifest import Label, Manifest, SampleRecord
from padbench.errors import DomainError


class SplitMode(str, Enum):
    RANDOM_BY_SUBJECT = "random_by_subject"
    LEAVE_ONE_PAIS_OUT = "leave_one_pais_out"

    @classmethod
    def parse(cls, value: "str | SplitMode") -> "SplitMode":
        aliases = {"subject": cls.RANDOM_BY_SUBJECT, "loco": cls.LEAVE_ONE_PAIS_OUT}
        if isinstance(value, SplitMode):
            return value
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class SplitSpec:
    mode: SplitMode
    test_fraction: float = 0.25
    held_out_pais: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", SplitMode.parse(self.mode))
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.mode is SplitMode.LEAVE_ONE_PAIS_OUT and not self.held_out_pais:
            raise DomainError("leave_one_pais_out requires held_out_pais")
        if self.mode is SplitMode.RANDOM_BY_SUBJECT and self.held_out_pais is not None:
            raise DomainError("held_out_pais is only valid in leave_one_pais_out mode")


def _n_test(n: int, fraction: float) -> int:
    return min(n - 1, max(1, round(n * fraction)))


def _partition(samples: list[SampleRecord], fraction: float, seed: int) -> tuple[list, list]:
    subjects = sorted({s.subject_id for s in samples if s.label is Label.BONA_FIDE and s.subject_id})
    if len(subjects) < 2:
        raise DomainError(f"subject-disjoint split needs at least 2 bona fide subjects, found {len(subjects)}")
    rng = random.Random(seed)
    rng.shuffle(subjects)
    test_subjects = set(subjects[: _n_test(len(subjects), fraction)])

    train, test = [], []
    loose: dict[str, list[SampleRecord]] = {}
    for s in samples:
        if s.subject_id in subjects:
            (test if s.subject_id in test_subjects else train).append(s)
        elif s.label is Label.ATTACK:
            loose.setdefault(s.pais.abbreviation, []).append(s)
        else:
            raise DomainError(f"{s.path}: bona fide sample without subject_id cannot be split by subject")
    # attacks not traceable to a known subject: stratified per PAIS
    for abbr in sorted(loose):
        group = sorted(loose[abbr], key=lambda s: s.path)
        rng.shuffle(group)
        k = _n_test(len(group), fraction) if len(group) > 1 else 0
        test.extend(group[:k])
        train.extend(group[k:])
    return train, test


def split(manifest: Manifest, spec: SplitSpec) -> dict[str, Manifest]:
    """Split ``manifest`` into ``{"train": ..., "test": ...}``; deterministic per seed."""
    samples = list(manifest.samples)
    held_out: list[SampleRecord] = []
    if spec.mode is SplitMode.LEAVE_ONE_PAIS_OUT:
        if manifest.pais(spec.held_out_pais) is None:
            raise DomainError(f"held-out PAIS {spec.held_out_pais!r} not in the manifest catalog")
        held_out = [s for s in samples if s.pais and s.pais.abbreviation == spec.held_out_pais]
        samples = [s for s in samples if not (s.pais and s.pais.abbreviation == spec.held_out_pais)]
    train, test = _partition(samples, spec.test_fraction, spec.seed)
    test.extend(held_out)
    key = attrgetter("path")
    return {
        "train": manifest.subset(sorted(train, key=key)),
        "test": manifest.subset(sorted(test, key=key)),
    }

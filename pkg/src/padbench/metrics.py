"""ISO/IEC 30107-3 classification error rates.

All rates are fractions in [0, 1]. Percent formatting lives in
:mod:`padbench.report`.

A score is the probability of the *attack* class; a presentation is
classified as an attack (``res = 1``) when ``score >= tau``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

from padbench.errors import DomainError

DEFAULT_TAU = 0.5


class GroundTruth(str, Enum):
    BONA_FIDE = "bona_fide"
    ATTACK = "attack"

    @classmethod
    def parse(cls, value: "str | GroundTruth") -> "GroundTruth":
        if isinstance(value, GroundTruth):
            return value
        key = value.strip().lower().replace("-", "_")
        if key in ("bona_fide", "bonafide", "bf", "genuine"):
            return cls.BONA_FIDE
        if key == "attack":
            return cls.ATTACK
        raise DomainError(f"unknown ground truth label {value!r}")


def _check_rate(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0):
        raise DomainError(f"{name} must be a finite value in [0, 1], got {value!r}")


def _check_tau(tau: float) -> None:
    if not (math.isfinite(tau) and 0.0 < tau < 1.0):
        raise DomainError(f"tau must lie in the open interval (0, 1), got {tau!r}")


def classify(score: float, tau: float = DEFAULT_TAU) -> int:
    """Return 1 (attack) if ``score >= tau`` else 0 (bona fide).

    Ties go to the attack class.
    """
    _check_rate("score", score)
    _check_tau(tau)
    return 1 if score >= tau else 0


@dataclass(frozen=True)
class Decision:
    """A scored presentation. ``res`` is derived from ``score`` and ``tau``."""

    sample_id: str
    score: float
    ground_truth: GroundTruth
    pais: str | None = None
    tau: float = DEFAULT_TAU

    def __post_init__(self) -> None:
        object.__setattr__(self, "ground_truth", GroundTruth.parse(self.ground_truth))
        _check_rate("score", self.score)
        _check_tau(self.tau)
        if self.ground_truth is GroundTruth.ATTACK and not self.pais:
            raise DomainError(f"attack decision {self.sample_id!r} has no PAIS")
        if self.ground_truth is GroundTruth.BONA_FIDE and self.pais:
            raise DomainError(f"bona fide decision {self.sample_id!r} carries PAIS {self.pais!r}")

    @property
    def res(self) -> int:
        return classify(self.score, self.tau)

    def at(self, tau: float) -> "Decision":
        return self if tau == self.tau else replace(self, tau=tau)


def apcer(decisions: Sequence[Decision]) -> float:
    """Fraction of attack presentations of one PAIS classified as bona fide."""
    if not decisions:
        raise DomainError("APCER undefined for an empty decision list")
    species = {d.pais for d in decisions}
    if any(d.ground_truth is not GroundTruth.ATTACK for d in decisions):
        raise DomainError("APCER accepts attack presentations only")
    if len(species) != 1:
        raise DomainError(f"APCER is computed per PAIS; got mixed species {sorted(species)}")
    return sum(1 - d.res for d in decisions) / len(decisions)


def bpcer(decisions: Sequence[Decision]) -> float:
    """Fraction of bona fide presentations classified as attacks."""
    if not decisions:
        raise DomainError("BPCER undefined for an empty decision list")
    if any(d.ground_truth is not GroundTruth.BONA_FIDE for d in decisions):
        raise DomainError("BPCER accepts bona fide presentations only")
    return sum(d.res for d in decisions) / len(decisions)


def hter(apcer_value: float, bpcer_value: float) -> float:
    _check_rate("apcer", apcer_value)
    _check_rate("bpcer", bpcer_value)
    return (apcer_value + bpcer_value) / 2


@dataclass(frozen=True)
class PaisMetrics:
    apcer: float
    hter: float
    n_pais: int


@dataclass(frozen=True)
class MetricsReport:
    tau: float
    bpcer: float
    n_bf: int
    per_pais: dict[str, PaisMetrics] = field(default_factory=dict)

    @property
    def apcer_max(self) -> float:
        return max(m.apcer for m in self.per_pais.values())

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "bpcer": self.bpcer,
            "n_bf": self.n_bf,
            "apcer_max": self.apcer_max,
            "per_pais": {
                k: {"apcer": m.apcer, "hter": m.hter, "n_pais": m.n_pais}
                for k, m in sorted(self.per_pais.items())
            },
        }


def metrics_report(decisions: Iterable[Decision], tau: float = DEFAULT_TAU) -> MetricsReport:
    """Per-PAIS APCER/HTER and global BPCER at threshold ``tau``.

    Each decision's ``res`` is recomputed at ``tau`` regardless of the
    threshold it was created with.
    """
    _check_tau(tau)
    bona_fide: list[Decision] = []
    groups: dict[str, list[Decision]] = {}
    for d in decisions:
        d = d.at(tau)
        if d.ground_truth is GroundTruth.BONA_FIDE:
            bona_fide.append(d)
        else:
            groups.setdefault(d.pais, []).append(d)
    if not bona_fide:
        raise DomainError("BPCER undefined: no bona fide presentations")
    if not groups:
        raise DomainError("APCER undefined: no attack presentations")
    b = bpcer(bona_fide)
    per_pais = {}
    for name in sorted(groups):
        a = apcer(groups[name])
        per_pais[name] = PaisMetrics(apcer=a, hter=hter(a, b), n_pais=len(groups[name]))
    return MetricsReport(tau=tau, bpcer=b, n_bf=len(bona_fide), per_pais=per_pais)

"""Score files: one scored presentation per line.

Format (UTF-8, LF line endings, header required)::

    sample_id,ground_truth,pais,score
    subject001_L_front_01.png,bonafide,,0.0132
    Cap_SGA7_Disp_4K_0001.png,attack,Dell-GA7,0.9871

The delimiter is a comma or a tab, detected from the header line.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from padbench.errors import FormatError
from padbench.metrics import DEFAULT_TAU, Decision, GroundTruth

HEADER = ("sample_id", "ground_truth", "pais", "score")


@dataclass(frozen=True)
class ScoreRecord:
    sample_id: str
    ground_truth: GroundTruth
    pais: str | None
    score: float

    def decision(self, tau: float = DEFAULT_TAU) -> Decision:
        return Decision(self.sample_id, self.score, self.ground_truth, self.pais, tau)


def _label(gt: GroundTruth) -> str:
    return "bonafide" if gt is GroundTruth.BONA_FIDE else "attack"


def format_scores(records: Iterable[ScoreRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([r.sample_id, _label(r.ground_truth), r.pais or "", repr(float(r.score))])
    return buf.getvalue()


def write_scores(path: str | Path, records: Iterable[ScoreRecord]) -> None:
    Path(path).write_text(format_scores(records), encoding="utf-8", newline="\n")


def parse_scores(text: str) -> list[ScoreRecord]:
    lines = text.splitlines()
    if not lines:
        raise FormatError("score file is empty; a header line is required")
    delimiter = "\t" if "\t" in lines[0] else ","
    reader = csv.reader(lines, delimiter=delimiter)
    header = tuple(h.strip() for h in next(reader))
    if header != HEADER:
        raise FormatError(f"score file header must be {','.join(HEADER)}; got {','.join(header)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise FormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
        sample_id, gt, pais, score = (c.strip() for c in row)
        try:
            value = float(score)
            record = ScoreRecord(sample_id, GroundTruth.parse(gt), pais or None, value)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            raise FormatError(f"line {lineno}: score {score!r} outside [0, 1]")
        if record.ground_truth is GroundTruth.ATTACK and not record.pais:
            raise FormatError(f"line {lineno}: attack record without PAIS abbreviation")
        if record.ground_truth is GroundTruth.BONA_FIDE and record.pais:
            raise FormatError(f"line {lineno}: bona fide record with PAIS {record.pais!r}")
        records.append(record)
    return records


def read_scores(path: str | Path) -> list[ScoreRecord]:
    return parse_scores(Path(path).read_text(encoding="utf-8"))

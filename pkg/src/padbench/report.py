"""Tables of evaluation results and the APCER/HTER table consistency audit.

Two presentation styles are supported:

* ``error_rates`` -- APCER, BPCER and HTER as error percentages (lower is better)
* ``paper_accuracy`` -- per-PAIS ``100 * (1 - APCER)`` and ``100 * (1 - BPCER)``,
  the accuracy-style figures used by the published APCER/BPCER tables.
  HTER stays an error rate in both styles.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path

from padbench.errors import DomainError, FormatError
from padbench.metrics import MetricsReport

AUDIT_TOLERANCE = 0.05

# Published per-PAIS APCER figures (accuracy style, percent) and HTER (error, percent).
PUBLISHED_APCER_ACCURACY = {
    "PADNet-1": {
        "Dell-GA7": 76.74,
        "Dell-GS9": 82.32,
        "Dell-NL1020": 99.39,
        "S3D-GA7": 99.83,
        "S3D-GS9": 94.48,
        "S3D-NL1020": 98.2,
        "Print-GA7": 97.57,
    },
    "PADNet-2": {
        "Dell-GA7": 75.84,
        "Dell-GS9": 74.89,
        "Dell-NL1020": 99.21,
        "S3D-GA7": 99.66,
        "S3D-GS9": 91.77,
        "S3D-NL1020": 98.2,
        "Print-GA7": 96.97,
    },
}
PUBLISHED_HTER = {
    "PADNet-1": {
        "Dell-GA7": 11.63,
        "Dell-GS9": 8.84,
        "Dell-NL1020": 0.30,
        "S3D-GA7": 0.08,
        "S3D-GS9": 2.76,
        "S3D-NL1020": 0.9,
        "Print-GA7": 1.21,
    },
    "PADNet-2": {
        "Dell-GA7": 12.08,
        "Dell-GS9": 12.555,
        "Dell-NL1020": 0.39,
        "S3D-GA7": 0.17,
        "S3D-GS9": 4.11,
        "S3D-NL1020": 0.9,
        "Print-GA7": 1.51,
    },
}


class Style(str, Enum):
    ERROR_RATES = "error_rates"
    PAPER_ACCURACY = "paper_accuracy"

    @classmethod
    def parse(cls, value: "str | Style") -> "Style":
        if isinstance(value, Style):
            return value
        return {"error": cls.ERROR_RATES, "paper": cls.PAPER_ACCURACY}.get(value) or cls(value)


def fmt_percent(value: float, places: int = 2) -> str:
    """Round half-up to ``places`` decimals (76.735 -> '76.74')."""
    # repr-based Decimal drops binary noise such as 76.73999999999999
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(round(value, 10))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class RenderedTables:
    text: str
    csv: str


def render_tables(report: MetricsReport, style: str | Style = Style.ERROR_RATES) -> RenderedTables:
    style = Style.parse(style)
    acc = style is Style.PAPER_ACCURACY
    rate_head = "APCER acc (%)" if acc else "APCER (%)"
    bf_head = "BPCER acc (%)" if acc else "BPCER (%)"

    def pct(rate: float) -> str:
        return fmt_percent(100.0 * (1.0 - rate) if acc else 100.0 * rate)

    rows = [("PAIS", "N", rate_head, "HTER (%)")]
    for name, m in report.per_pais.items():
        rows.append((name, str(m.n_pais), pct(m.apcer), fmt_percent(100.0 * m.hter)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = [f"tau = {report.tau:g}    style = {style.value}", ""]
    for i, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(r, widths))))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    lines += ["", f"bona fide  N = {report.n_bf}  {bf_head} = {pct(report.bpcer)}"]
    lines.append(f"worst-case APCER (%) = {fmt_percent(100.0 * report.apcer_max)}")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "pais", "n", "apcer", "bpcer", "hter"])
    for name, m in report.per_pais.items():
        w.writerow(["attack", name, m.n_pais, repr(m.apcer), repr(report.bpcer), repr(m.hter)])
    w.writerow(["bona_fide", "", report.n_bf, "", repr(report.bpcer), ""])
    return RenderedTables("\n".join(lines) + "\n", buf.getvalue())


@dataclass(frozen=True)
class AuditRow:
    key: str
    apcer_accuracy: float
    printed_hter: float
    implied_hter: float
    residual: float
    passed: bool


def audit_paper_consistency(
    apcer_accuracy: Mapping[str, float],
    hter_values: Mapping[str, float],
    tolerance: float = AUDIT_TOLERANCE,
) -> list[AuditRow]:
    """Check ``|(100 - APCER_acc) / 2 - HTER| <= tolerance`` per key (bona fide error taken as 0)."""
    if set(apcer_accuracy) != set(hter_values):
        diff = sorted(set(apcer_accuracy) ^ set(hter_values))
        raise DomainError(f"APCER and HTER tables disagree on keys: {diff}")
    rows = []
    for key in sorted(apcer_accuracy):
        a, h = float(apcer_accuracy[key]), float(hter_values[key])
        implied = (100.0 - a) / 2.0
        residual = abs(implied - h)
        # 1e-9 absorbs binary rounding of decimal inputs
        rows.append(AuditRow(key, a, h, implied, residual, residual <= tolerance + 1e-9))
    return rows


def format_audit(rows: list[AuditRow]) -> str:
    lines = ["key,apcer_accuracy,printed_hter,implied_hter,residual,status"]
    for r in rows:
        lines.append(
            f"{r.key},{r.apcer_accuracy:g},{r.printed_hter:g},{r.implied_hter:.4f},"
            f"{r.residual:.4f},{'pass' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"


def table_key(pais: str, variant: str | None) -> str:
    return f"{pais}@{variant}" if variant else pais


def flatten_table(values: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    return {table_key(p, v): x for v, per in values.items() for p, x in per.items()}


def write_table_csv(path: str | Path, values: Mapping[str, Mapping[str, float]]) -> None:
    lines = ["pais,variant,value"]
    for variant, per in values.items():
        lines += [f"{p},{variant},{v:g}" for p, v in per.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_table_csv(path: str | Path) -> dict[str, float]:
    """Read ``pais,value`` or ``pais,variant,value`` rows keyed by :func:`table_key`."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or not {"pais", "value"} <= set(reader.fieldnames):
        raise FormatError(f"{path}: expected columns pais[,variant],value")
    out: dict[str, float] = {}
    for lineno, row in enumerate(reader, start=2):
        key = table_key(row["pais"].strip(), (row.get("variant") or "").strip() or None)
        try:
            value = float(row["value"])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad value {row['value']!r}") from exc
        if not math.isfinite(value):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate key {key}")
        out[key] = value
    return out

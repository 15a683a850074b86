"""Report assembly and serialization: JSON, CSV plot data and PNG curves."""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from PIL import Image, ImageDraw

from src.cubecx import HomologyResult
from src.errors import AuditFailure
from src.kecx import ExactnessReport, RelationsReport
from src.upsilon import ClassInvariants, PiecewiseLinearFn

ENGINE_VERSION = "0.1.0"
CSV_COLUMNS = ["t", "upsilon", "class", "t_exact", "upsilon_exact"]
PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40), (148, 103, 189), (140, 86, 75)]


def rational(value: Fraction | int) -> str:
    """Lossless "p/q" text for a rational."""
    return str(Fraction(value))


def decimal(value: Fraction, digits: int = 12) -> str:
    return f"{float(value):.{digits}g}"


def breakpoints_payload(f: PiecewiseLinearFn) -> list[list[str]]:
    return [[rational(t), rational(v)] for t, v in f.breakpoints]


def conjugation_symmetric(f: PiecewiseLinearFn, g: PiecewiseLinearFn) -> bool:
    """True iff f(t) = g(2 − t) at every breakpoint of either function."""
    ts = {t for t, _ in f.breakpoints} | {2 - t for t, _ in g.breakpoints}
    return all(f(t) == g(2 - t) for t in ts)


@dataclass
class Provenance:
    """Where a report came from and how it was truncated."""

    input_name: str
    input_fingerprint: str
    config_digest: str
    parameters: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "engine_version": ENGINE_VERSION,
            "input": self.input_name,
            "input_xxh64": self.input_fingerprint,
            "config_xxh64": self.config_digest,
            "parameters": {key: str(value) for key, value in sorted(self.parameters.items())},
        }


@dataclass
class InvariantReport:
    """Per-class invariants of one plumbing input.

    Attributes:
        provenance: Input and truncation record.
        classes: Invariants ordered by class index.
        conjugates: Conjugate class index per class index.
        homology: Optional cube-complex results by class index.
    """

    provenance: Provenance
    classes: list[ClassInvariants]
    conjugates: dict[int, int] = field(default_factory=dict)
    homology: dict[int, HomologyResult] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        """Serialize, re-checking Υ(0) = d for every class.

        Raises:
            AuditFailure: If a class's Υ(0) differs from its d field.
        """
        by_index = {item.spinc.index: item for item in self.classes}
        payload_classes = []
        for item in self.classes:
            at_zero = item.upsilon(Fraction(0))
            if at_zero != item.d:
                raise AuditFailure(f"Class {item.spinc.index}: Upsilon(0) = {at_zero} but d = {item.d}")
            entry: dict[str, Any] = {
                "index": item.spinc.index,
                "representative": list(item.spinc.representative),
                "upsilon": breakpoints_payload(item.upsilon),
                "tau": rational(item.tau),
                "d": rational(item.d),
                "upsilon_at_zero_equals_d": True,
                "audit": {
                    "window_radius": item.audit.window_radius,
                    "vectors_checked": item.audit.vectors_checked,
                    "sharp": item.audit.sharp,
                    "sharpness_expected": item.sharp_expected,
                },
            }
            partner = by_index.get(self.conjugates.get(item.spinc.index, -1))
            entry["conjugate_class"] = self.conjugates.get(item.spinc.index)
            entry["conjugation_symmetric"] = (
                conjugation_symmetric(item.upsilon, partner.upsilon) if partner is not None else None
            )
            if item.spinc.index in self.homology:
                entry["homology"] = homology_payload(self.homology[item.spinc.index])
            payload_classes.append(entry)
        return {"provenance": self.provenance.to_json(), "classes": payload_classes}


def homology_payload(result: HomologyResult) -> dict[str, Any]:
    return {
        "index": result.spinc.index,
        "t": rational(result.t),
        "box": result.box,
        "upsilon": rational(result.upsilon),
        "barcode": result.barcode.to_json(),
        "reduced": result.reduced.to_json(),
    }


def exactness_payload(report: ExactnessReport, fixture: str) -> dict[str, Any]:
    return {
        "fixture": fixture,
        "vertex": report.vertex,
        "t": rational(report.t),
        "window": report.window,
        "qmax": rational(report.qmax),
        "escapes": report.escapes,
        "checks": [{"name": c.name, "pass": c.passed, "detail": c.detail} for c in report.checks],
    }


def relations_payload(index: int, report: RelationsReport) -> dict[str, Any]:
    return {
        "index": index,
        "t": rational(report.t),
        "vectors_checked": report.vectors_checked,
        "cases": dict(sorted(report.cases.items())),
        "uncovered": [[list(k), label] for k, label in report.uncovered],
    }


def dumps(payload: dict[str, Any]) -> str:
    """Deterministic JSON text."""
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def t_grid(denominator: int) -> list[Fraction]:
    """t = j/b for j = 0..2b."""
    return [Fraction(j, denominator) for j in range(2 * denominator + 1)]


def plot_rows(classes: Sequence[ClassInvariants], denominator: int, digits: int = 12) -> list[dict[str, str]]:
    """Υ samples at breakpoints plus the grid, per class, sorted by (class, t)."""
    rows = []
    for item in classes:
        ts = sorted({t for t, _ in item.upsilon.breakpoints} | set(t_grid(denominator)))
        for t in ts:
            value = item.upsilon(t)
            rows.append({
                "t": decimal(t, digits),
                "upsilon": decimal(value, digits),
                "class": str(item.spinc.index),
                "t_exact": rational(t),
                "upsilon_exact": rational(value),
            })
    return rows


def rows_to_csv(rows: list[dict[str, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


class ReportWriter:
    """Write reports to stdout or files in the configured formats."""

    def __init__(self, config: dict[str, Any]) -> None:
        """Initialize the writer.

        Args:
            config: Configuration dictionary containing output.csv_digits,
                output.png_size and output.t_grid.
        """
        self.logger = logging.getLogger("PlumbCalc.Report")
        out_cfg = config.get("output", {})
        self.digits = out_cfg.get("csv_digits", 12)
        self.png_size = tuple(out_cfg.get("png_size", [640, 480]))
        self.t_grid = out_cfg.get("t_grid", 6)

    def emit(self, text: str, out: str | None) -> str:
        """Write text to a file, or return it for stdout."""
        if out:
            Path(out).write_text(text, encoding="utf-8")
            self.logger.info(f"Wrote {len(text)} bytes to {out}")
        return text

    def csv(self, classes: Sequence[ClassInvariants], denominator: int | None = None) -> str:
        rows = plot_rows(classes, denominator or self.t_grid, self.digits)
        self.logger.debug(f"Plot data: {len(rows)} rows for {len(classes)} classes")
        return rows_to_csv(rows)

    def render_png(self, classes: Sequence[ClassInvariants], path: str) -> None:
        """Draw each class's Υ as a polyline on shared axes."""
        width, height = self.png_size
        margin = 40
        values = [v for item in classes for _, v in item.upsilon.breakpoints]
        low, high = min(values), max(values)
        if low == high:
            low, high = low - 1, high + 1

        def to_pixel(t: Fraction, v: Fraction) -> tuple[float, float]:
            x = margin + float(t) / 2 * (width - 2 * margin)
            y = height - margin - float((v - low) / (high - low)) * (height - 2 * margin)
            return x, y

        image = Image.new("RGB", (width, height), "white")
        draw = ImageDraw.Draw(image)
        draw.line([(margin, height - margin), (width - margin, height - margin)], fill="black")
        draw.line([(margin, margin), (margin, height - margin)], fill="black")
        if low <= 0 <= high:
            draw.line([to_pixel(Fraction(0), Fraction(0)), to_pixel(Fraction(2), Fraction(0))], fill=(200, 200, 200))
        for n, item in enumerate(classes):
            color = PALETTE[n % len(PALETTE)]
            points = [to_pixel(t, v) for t, v in item.upsilon.breakpoints]
            draw.line(points, fill=color, width=2)
            draw.text((width - margin - 60, margin + 14 * n), f"class {item.spinc.index}", fill=color)
        image.save(path, format="PNG")
        self.logger.info(f"Rendered {len(classes)} curves to {path}")

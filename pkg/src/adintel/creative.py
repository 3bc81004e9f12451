"""Creative scoring support: attention heatmaps, salient-region ranking,
ablation plans, and degradation reports comparing variants to originals.

Heatmaps are ingested as standalone grid artifacts; nothing here touches
the engagement-prediction model that produced them.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, asdict
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Sequence

from .errors import AllZero, HeatmapError, ShapeMismatch, ZeroDenominator, ZeroImpressions


@dataclass
class AttentionHeatmap:
    creative_id: str
    width: int
    height: int
    weights: list[float]  # row-major, normalized to [0, 1] by max on load

    def at(self, x: int, y: int) -> float:
        return self.weights[y * self.width + x]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SalientRegion:
    region_id: str
    bbox: tuple[int, int, int, int]  # (x0, y0, x1, y1) inclusive cells
    mass: float
    peak: float
    cells: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "bbox": list(self.bbox),
            "mass": self.mass,
            "peak": self.peak,
            "cells": [list(c) for c in self.cells],
        }


@dataclass
class VariantStats:
    variant_id: str
    label: str
    impressions: int
    clicks: int
    lpv: int
    results: int
    removed_elements: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.clicks > self.impressions:
            raise ValueError(f"{self.variant_id}: clicks > impressions")
        if self.lpv > self.clicks:
            raise ValueError(f"{self.variant_id}: lpv > clicks")
        if self.results > self.clicks:
            raise ValueError(f"{self.variant_id}: results > clicks")


@dataclass
class ReportRow:
    label: str
    lpv_ratio: float
    ctr_lpv_ratio: float
    ctr_ratio: float
    f1: float


@dataclass
class AblationReport:
    rows: list[ReportRow]
    overall: ReportRow

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "overall": asdict(self.overall)}


# ---------------------------------------------------------------------------
# heatmaps

def heatmap_from_dict(obj: dict) -> AttentionHeatmap:
    try:
        width = int(obj["width"])
        height = int(obj["height"])
        weights = [float(w) for w in obj["weights"]]
        creative_id = str(obj["creative_id"])
    except (KeyError, TypeError, ValueError) as e:
        raise HeatmapError(f"bad heatmap object: {e}") from e
    if width < 1 or height < 1:
        raise HeatmapError("width and height must be positive")
    if len(weights) != width * height:
        raise ShapeMismatch(
            f"{len(weights)} weights for {width}x{height} grid")
    if any(w < 0 for w in weights):
        raise HeatmapError("negative weight")
    top = max(weights)
    if top <= 0:
        raise AllZero("all weights zero")
    return AttentionHeatmap(creative_id, width, height, [w / top for w in weights])


def load_heatmap(path: str | Path) -> AttentionHeatmap:
    """Load and max-normalize a heatmap grid file."""
    with Path(path).open("r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return heatmap_from_dict(obj)


def save_heatmap(heatmap: AttentionHeatmap, path: str | Path) -> None:
    Path(path).write_text(json.dumps(heatmap.to_dict()), encoding="utf-8")


def rank_regions(heatmap: AttentionHeatmap, threshold: float) -> list[SalientRegion]:
    """Connected components (4-connectivity) of cells with weight >=
    threshold, sorted by mass descending, ties by (y0, x0)."""
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must be in (0, 1)")
    w, h = heatmap.width, heatmap.height
    hot = [heatmap.weights[i] >= threshold for i in range(w * h)]
    seen = [False] * (w * h)
    raw_regions = []
    for start in range(w * h):
        if not hot[start] or seen[start]:
            continue
        # flood fill
        stack = [start]
        seen[start] = True
        cells = []
        while stack:
            i = stack.pop()
            cells.append((i % w, i // w))
            x, y = i % w, i // w
            for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if 0 <= nx < w and 0 <= ny < h:
                    j = ny * w + nx
                    if hot[j] and not seen[j]:
                        seen[j] = True
                        stack.append(j)
        cells.sort(key=lambda c: (c[1], c[0]))
        xs = [c[0] for c in cells]
        ys = [c[1] for c in cells]
        raw_regions.append((
            sum(heatmap.at(x, y) for x, y in cells),
            max(heatmap.at(x, y) for x, y in cells),
            (min(xs), min(ys), max(xs), max(ys)),
            cells,
        ))
    raw_regions.sort(key=lambda r: (-r[0], r[2][1], r[2][0]))
    return [
        SalientRegion(f"r{i + 1}", bbox, mass, peak, cells)
        for i, (mass, peak, bbox, cells) in enumerate(raw_regions)
    ]


def plan_ablation(regions: Sequence[SalientRegion], element_labels: dict[str, str],
                  max_variants: int) -> list[dict]:
    """Cumulative removal plan: variant i removes the top-i elements."""
    plans = []
    for i in range(min(len(regions), max_variants)):
        removed = [
            element_labels.get(r.region_id, r.region_id)
            for r in regions[: i + 1]
        ]
        plans.append({
            "variant_index": i + 1,
            "label": "no-" + "+".join(removed),
            "removed_region_ids": [r.region_id for r in regions[: i + 1]],
            "removed_elements": removed,
        })
    return plans


# ---------------------------------------------------------------------------
# funnel math

def funnel_rates(stats: VariantStats) -> tuple[float, float, float]:
    """(ctr, lpv_per_click, result_per_click); click-denominated rates are
    0 when clicks are 0."""
    if stats.impressions <= 0:
        raise ZeroImpressions(stats.variant_id)
    ctr = stats.clicks / stats.impressions
    lpv_per_click = stats.lpv / stats.clicks if stats.clicks else 0.0
    result_per_click = stats.results / stats.clicks if stats.clicks else 0.0
    return ctr, lpv_per_click, result_per_click


def _round3(x: float) -> float:
    return float(Decimal(repr(x)).quantize(Decimal("0.001"), ROUND_HALF_UP))


def degradation_report(original: VariantStats, variants: Sequence[VariantStats]) -> AblationReport:
    """Per-variant performance ratios against the original, to 3 decimals.

    lpv_ratio compares lpv/impressions, ctr_ratio clicks/impressions,
    ctr_lpv_ratio lpv/clicks; f1 is the harmonic mean of ctr_lpv_ratio and
    ctr_ratio (the aggregate column formula is ours, documented in the
    README). The overall row is the arithmetic mean of per-variant values.
    """
    if original.impressions <= 0:
        raise ZeroDenominator("impressions", original.variant_id)
    if original.clicks <= 0:
        raise ZeroDenominator("clicks", original.variant_id)
    if original.lpv <= 0:
        raise ZeroDenominator("lpv", original.variant_id)

    ctr_o = original.clicks / original.impressions
    lpv_rate_o = original.lpv / original.impressions
    lpv_pc_o = original.lpv / original.clicks

    raw_rows = []
    for v in variants:
        if v.impressions <= 0:
            raise ZeroDenominator("impressions", v.variant_id)
        ctr_r = (v.clicks / v.impressions) / ctr_o
        lpv_r = (v.lpv / v.impressions) / lpv_rate_o
        if v.clicks > 0:
            ctr_lpv_r = (v.lpv / v.clicks) / lpv_pc_o
        else:
            ctr_lpv_r = 0.0
        denom = ctr_lpv_r + ctr_r
        f1 = 2.0 * ctr_lpv_r * ctr_r / denom if denom > 0 else 0.0
        raw_rows.append((v.label, lpv_r, ctr_lpv_r, ctr_r, f1))

    rows = [
        ReportRow(label, _round3(a), _round3(b), _round3(c), _round3(d))
        for label, a, b, c, d in raw_rows
    ]
    if raw_rows:
        n = len(raw_rows)
        means = [sum(r[i] for r in raw_rows) / n for i in (1, 2, 3, 4)]
    else:
        means = [0.0, 0.0, 0.0, 0.0]
    overall = ReportRow("overall", *(_round3(m) for m in means))
    return AblationReport(rows, overall)


def summarize_drops(report: AblationReport) -> list[tuple[str, str, int]]:
    """(element, metric, drop_pct) rows; drop_pct = 100*(1 - ratio),
    rounded half-up."""
    out = []
    for row in report.rows:
        for metric, ratio in (("lpv", row.lpv_ratio), ("ctr_lpv", row.ctr_lpv_ratio),
                              ("ctr", row.ctr_ratio), ("f1", row.f1)):
            pct = Decimal(repr(100.0 * (1.0 - ratio))).quantize(Decimal("1"), ROUND_HALF_UP)
            out.append((row.label, metric, int(pct)))
    return out


# ---------------------------------------------------------------------------
# CSV interfaces

VARIANT_CSV_HEADER = ["variant_id", "label", "impressions", "clicks", "lpv",
                      "results", "removed_elements"]


def read_variant_csv(path: str | Path) -> list[VariantStats]:
    out = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(VARIANT_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"variant csv missing columns: {sorted(missing)}")
        for rec in reader:
            stats = VariantStats(
                variant_id=rec["variant_id"],
                label=rec["label"],
                impressions=int(rec["impressions"]),
                clicks=int(rec["clicks"]),
                lpv=int(rec["lpv"]),
                results=int(rec["results"]),
                removed_elements=[e for e in rec["removed_elements"].split(";") if e],
            )
            stats.validate()
            out.append(stats)
    return out


def report_to_csv(report: AblationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "lpv_ratio", "ctr_lpv_ratio", "ctr_ratio", "f1"])
    for row in report.rows + [report.overall]:
        writer.writerow([row.label, f"{row.lpv_ratio:.3f}", f"{row.ctr_lpv_ratio:.3f}",
                         f"{row.ctr_ratio:.3f}", f"{row.f1:.3f}"])
    return buf.getvalue()

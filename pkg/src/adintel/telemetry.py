"""Campaign telemetry: derived funnel metrics, weekly/daily/creative
aggregation, percentage-change trends, the analysis prompt bundle, and
typed recommendation parsing.

Zero denominators never fault; the affected metric is flagged undefined
(None) and rendered as "n/a" so the analyst model is not fed fake zeros.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import re
from dataclasses import dataclass, field, asdict
from datetime import date
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Optional, Sequence

from .errors import AllUndefined, EmptyInput, NoActionsFound, UndecodableImage
from .gateway import extract_object, load_packaged_template

GRANULARITIES = ("weekly", "daily", "creative")

METRIC_NAMES = ("reach", "frequency", "results", "cpr", "spend", "cpm",
                "ctr", "cr_click_to_view", "cr_click_to_result")

ACTION_KINDS = ("budget", "creative", "targeting", "pacing", "monitoring")

CONFIDENCE_LEVELS = ("low", "medium", "high")

GUIDING_QUESTIONS = (
    "How did CPR and Spend evolve?",
    "What were the corresponding changes in CTR, CPM, and CR?",
    "Were these changes causally connected?",
    "Which secondary metrics influenced CPR the most?",
    "What creative-level insights explain these shifts?",
    "What actions should be taken?",
)

DEFAULT_KNOWLEDGE = (
    "Metric definitions. Reach: unique people exposed. Frequency: average "
    "exposures per person (impressions / reach). Results: conversions "
    "attributed to the campaign. CPR: spend / results. Spend: budget "
    "deployed. CPM: 1000 * spend / impressions. CTR: clicks / impressions. "
    "CR click-to-view: landing page views / clicks. CR click-to-result: "
    "results / clicks."
)

DEFAULT_ROLE = (
    "You are a senior performance marketing lead. Give decisive, "
    "insight-driven guidance and avoid hedging language."
)

DEFAULT_TASK = (
    "Minimize cost per result. Review the CPR and Spend trends below "
    "alongside CTR, CPM, and the conversion rates, and identify the "
    "strategic shifts they imply."
)


@dataclass
class RawTelemetryRow:
    date: str  # ISO-8601
    creative_id: str
    impressions: int
    clicks: int
    lpv: int
    results: int
    spend: float
    reach: int

    def validate(self) -> None:
        if self.clicks > self.impressions:
            raise ValueError(f"{self.date}/{self.creative_id}: clicks > impressions")
        if self.reach > self.impressions:
            raise ValueError(f"{self.date}/{self.creative_id}: reach > impressions")
        if self.results < 0 or self.spend < 0 or self.lpv < 0:
            raise ValueError(f"{self.date}/{self.creative_id}: negative counts")
        date.fromisoformat(self.date)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MetricRow:
    period_key: str
    impressions: int
    clicks: int
    lpv: int
    results: int
    reach: int
    spend: float
    frequency: Optional[float]
    cpr: Optional[float]
    cpm: Optional[float]
    ctr: Optional[float]
    cr_click_to_view: Optional[float]
    cr_click_to_result: Optional[float]

    def metric(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrendSeries:
    granularity: str
    points: list[MetricRow]
    pct_changes: list[dict[str, Optional[float]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "points": [p.to_dict() for p in self.points],
            "pct_changes": self.pct_changes,
        }


@dataclass
class RecommendedAction:
    kind: str
    description: str
    confidence: str = "low"
    evidence_refs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AnalysisPrompt:
    sections: dict[str, str]  # knowledge, role, task, guiding_questions, data
    guiding_questions: tuple[str, ...]
    image_payloads: list[tuple[str, str]] = field(default_factory=list)
    text: str = ""

    def __post_init__(self):
        expected = ("knowledge", "role", "task", "guiding_questions", "data")
        if tuple(self.sections) != expected:
            raise ValueError(f"sections must be {expected} in order")
        for name, content in self.sections.items():
            if not str(content).strip():
                raise ValueError(f"section {name} is empty")
        if len(self.guiding_questions) != 6:
            raise ValueError("exactly six guiding questions required")


# ---------------------------------------------------------------------------
# metric derivation

def derive_metrics(rows: Sequence[RawTelemetryRow], period_key: str) -> MetricRow:
    """Sum a one-period group, then apply the rate formulas."""
    if not rows:
        raise EmptyInput("empty metric group")
    impressions = sum(r.impressions for r in rows)
    clicks = sum(r.clicks for r in rows)
    lpv = sum(r.lpv for r in rows)
    results = sum(r.results for r in rows)
    reach = sum(r.reach for r in rows)
    spend = sum(r.spend for r in rows)

    return MetricRow(
        period_key=period_key,
        impressions=impressions,
        clicks=clicks,
        lpv=lpv,
        results=results,
        reach=reach,
        spend=spend,
        frequency=impressions / reach if reach > 0 else None,
        cpr=spend / results if results > 0 else None,
        cpm=(1000.0 * spend) / impressions if impressions > 0 else None,
        ctr=clicks / impressions if impressions > 0 else None,
        cr_click_to_view=lpv / clicks if clicks > 0 else None,
        cr_click_to_result=results / clicks if clicks > 0 else None,
    )


def iso_week_key(day: str) -> str:
    y, w, _ = date.fromisoformat(day).isocalendar()
    return f"{y}-W{w:02d}"


def aggregate(rows: Sequence[RawTelemetryRow], granularity: str) -> TrendSeries:
    """Bucket raw rows (ISO weeks / days / creative_id) and derive metrics.

    Weekly and daily series carry percentage changes between consecutive
    points; the creative breakdown has none (it is not a time axis).
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    if not rows:
        raise EmptyInput("no telemetry rows")

    def key(row: RawTelemetryRow) -> str:
        if granularity == "weekly":
            return iso_week_key(row.date)
        if granularity == "daily":
            return row.date
        return row.creative_id

    buckets: dict[str, list[RawTelemetryRow]] = {}
    for row in rows:
        buckets.setdefault(key(row), []).append(row)

    points = [derive_metrics(buckets[k], k) for k in sorted(buckets)]
    series = TrendSeries(granularity=granularity, points=points)
    if granularity != "creative":
        series.pct_changes = _point_pct_changes(points)
    return series


def pct_change(values: Sequence[Optional[float]]) -> list[Optional[float]]:
    """out[i] = 100*(x[i+1]-x[i])/x[i]; None marks an undefined delta
    (zero or undefined base, or undefined next value)."""
    out: list[Optional[float]] = []
    for prev, curr in zip(values, values[1:]):
        if prev is None or curr is None or prev == 0:
            out.append(None)
        else:
            out.append(100.0 * (curr - prev) / prev)
    return out


def _point_pct_changes(points: Sequence[MetricRow]) -> list[dict[str, Optional[float]]]:
    per_metric = {
        name: pct_change([p.metric(name) for p in points])
        for name in METRIC_NAMES
    }
    return [
        {name: per_metric[name][i] for name in METRIC_NAMES}
        for i in range(len(points) - 1)
    ]


def summarize_ranges(series: TrendSeries, metric_names: Sequence[str]) -> dict[str, tuple[float, float]]:
    """(min, max) over the defined values of each requested metric."""
    if not series.points:
        raise EmptyInput("empty series")
    out = {}
    for name in metric_names:
        defined = [p.metric(name) for p in series.points if p.metric(name) is not None]
        if not defined:
            raise AllUndefined(name)
        out[name] = (min(defined), max(defined))
    return out


# ---------------------------------------------------------------------------
# creative encoding

ENCODED_SIZE = 512


def encode_creative(image_path: str | Path) -> tuple[str, str]:
    """Resize to exactly 512x512 (bilinear; aspect is distorted for
    non-square inputs) and return (creative_id, base64 PNG payload).
    A 512x512 input passes through pixel-identical."""
    from PIL import Image, UnidentifiedImageError

    path = Path(image_path)
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError) as e:
        raise UndecodableImage(f"{path}: {e}") from e
    if img.size != (ENCODED_SIZE, ENCODED_SIZE):
        img = img.resize((ENCODED_SIZE, ENCODED_SIZE), Image.BILINEAR)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return path.stem, base64.b64encode(buf.getvalue()).decode("ascii")


# ---------------------------------------------------------------------------
# prompt assembly

def _money(x: Optional[float]) -> str:
    if x is None:
        return "n/a"
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _pct(x: Optional[float]) -> str:
    if x is None:
        return "n/a"
    return str(Decimal(repr(100.0 * x)).quantize(Decimal("0.01"), ROUND_HALF_UP)) + "%"


def _num(x: Optional[float]) -> str:
    if x is None:
        return "n/a"
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _delta(x: Optional[float]) -> str:
    if x is None:
        return "n/a"
    q = Decimal(repr(x)).quantize(Decimal("0.1"), ROUND_HALF_UP)
    return ("+" if q >= 0 else "") + str(q) + "%"


_TABLE_COLUMNS = (
    ("period", 12), ("reach", 9), ("frequency", 10), ("results", 8),
    ("cpr", 9), ("spend", 10), ("cpm", 8), ("ctr", 8),
    ("cr_view", 9), ("cr_result", 10),
)


def render_data_table(series: TrendSeries) -> str:
    """Fixed-width metric table plus per-transition percentage changes."""
    lines = ["".join(name.ljust(width) if i == 0 else name.rjust(width)
                     for i, (name, width) in enumerate(_TABLE_COLUMNS))]
    for p in series.points:
        cells = (
            p.period_key, str(p.reach), _num(p.frequency), str(p.results),
            _money(p.cpr), _money(p.spend), _money(p.cpm), _pct(p.ctr),
            _pct(p.cr_click_to_view), _pct(p.cr_click_to_result),
        )
        lines.append("".join(
            cell.ljust(width) if i == 0 else cell.rjust(width)
            for i, (cell, (_, width)) in enumerate(zip(cells, _TABLE_COLUMNS))))

    if series.pct_changes:
        lines.append("")
        lines.append("Change vs previous period:")
        for i, delta in enumerate(series.pct_changes):
            cells = (
                series.points[i + 1].period_key, _delta(delta["reach"]),
                _delta(delta["frequency"]), _delta(delta["results"]),
                _delta(delta["cpr"]), _delta(delta["spend"]), _delta(delta["cpm"]),
                _delta(delta["ctr"]), _delta(delta["cr_click_to_view"]),
                _delta(delta["cr_click_to_result"]),
            )
            lines.append("".join(
                cell.ljust(width) if j == 0 else cell.rjust(width)
                for j, (cell, (_, width)) in enumerate(zip(cells, _TABLE_COLUMNS))))
    return "\n".join(lines).rstrip() + "\n"


def build_analysis_prompt(series: TrendSeries,
                          creatives: Sequence[tuple[str, str]] = (),
                          knowledge_text: str = DEFAULT_KNOWLEDGE,
                          role_text: str = DEFAULT_ROLE,
                          task_text: str = DEFAULT_TASK,
                          questions: Optional[Sequence[str]] = None) -> AnalysisPrompt:
    """Assemble the five-section analysis prompt; rendering is a pure
    function of the inputs (byte-deterministic)."""
    if not series.points:
        raise EmptyInput("empty series")
    qs = tuple(questions) if questions is not None else GUIDING_QUESTIONS
    if len(qs) != 6:
        raise ValueError("exactly six guiding questions required")

    data_table = render_data_table(series)
    template = load_packaged_template("telemetry_analysis")
    text = template.render({
        "knowledge_text": knowledge_text,
        "role_text": role_text,
        "task_text": task_text,
        "data_table": data_table,
    })
    if qs != GUIDING_QUESTIONS:
        # template carries the stock questions; splice in the override
        stock = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(GUIDING_QUESTIONS))
        text = text.replace(stock, "\n".join(f"{i + 1}. {q}" for i, q in enumerate(qs)))

    return AnalysisPrompt(
        sections={
            "knowledge": knowledge_text,
            "role": role_text,
            "task": task_text,
            "guiding_questions": "\n".join(qs),
            "data": data_table,
        },
        guiding_questions=qs,
        image_payloads=list(creatives),
        text=text,
    )


# ---------------------------------------------------------------------------
# recommendation parsing

_KIND_KEYWORDS = (
    ("budget", ("budget", "bid")),
    ("creative", ("creative", "visual", "a/b")),
    ("targeting", ("audience", "retarget")),
    ("pacing", ("pacing", "schedule")),
    ("monitoring", ("monitor", "track")),
)

_METRIC_WORDS = ("cpr", "cpm", "ctr", "spend", "reach", "frequency", "results", "cr")


def _kind_for(text: str) -> Optional[str]:
    lowered = text.lower()
    for kind, needles in _KIND_KEYWORDS:
        if any(n in lowered for n in needles):
            return kind
    return None


def _evidence_for(text: str) -> list[str]:
    lowered = text.lower()
    return [m for m in _METRIC_WORDS
            if re.search(rf"\b{re.escape(m)}\b", lowered)]


def _action_from_obj(obj: dict) -> Optional[RecommendedAction]:
    description = str(obj.get("description", "")).strip()
    if not description:
        return None
    kind = str(obj.get("kind", "")).strip().lower()
    if kind not in ACTION_KINDS:
        kind = _kind_for(kind + " " + description) or "monitoring"
    confidence = str(obj.get("confidence", "")).strip().lower()
    if confidence not in CONFIDENCE_LEVELS:
        confidence = "medium"
    evidence = obj.get("evidence") or obj.get("evidence_refs") or []
    if not isinstance(evidence, list):
        evidence = []
    return RecommendedAction(kind, description,
                             confidence, [str(e) for e in evidence])


def parse_recommendations(llm_text: str) -> list[RecommendedAction]:
    """Typed actions from analyst output.

    Structured path first (an object with an "actions" list, or one flat
    action object); otherwise a keyword heuristic maps each actionable
    sentence to a kind at low confidence. Raises NoActionsFound when
    neither path yields anything.
    """
    if not llm_text.strip():
        raise NoActionsFound("empty text")

    obj = extract_object(llm_text)
    if obj is not None:
        entries = obj.get("actions") if isinstance(obj.get("actions"), list) else [obj]
        actions = [a for a in (_action_from_obj(e) for e in entries
                               if isinstance(e, dict)) if a is not None]
        if actions:
            return actions

    actions = []
    for line in llm_text.splitlines():
        line = line.strip().lstrip("-*• ").strip()
        if not line:
            continue
        for sentence in re.split(r"(?<=[.!?])\s+", line):
            sentence = sentence.strip()
            if not sentence:
                continue
            kind = _kind_for(sentence)
            if kind is not None:
                actions.append(RecommendedAction(
                    kind, sentence, "low", _evidence_for(sentence)))
    if not actions:
        raise NoActionsFound("no actionable lines")
    return actions


# ---------------------------------------------------------------------------
# CSV import / persistence

TELEMETRY_CSV_HEADER = ["date", "creative_id", "impressions", "clicks", "lpv",
                        "results", "spend", "reach"]


def read_telemetry_csv(path: str | Path) -> list[RawTelemetryRow]:
    out = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TELEMETRY_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"telemetry csv missing columns: {sorted(missing)}")
        for rec in reader:
            row = RawTelemetryRow(
                date=rec["date"],
                creative_id=rec["creative_id"],
                impressions=int(rec["impressions"]),
                clicks=int(rec["clicks"]),
                lpv=int(rec["lpv"]),
                results=int(rec["results"]),
                spend=float(rec["spend"]),
                reach=int(rec["reach"]),
            )
            row.validate()
            out.append(row)
    return out


class TelemetryStore:
    """Append-only telemetry row log inside the store directory."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._rows: list[RawTelemetryRow] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._rows.append(RawTelemetryRow(**json.loads(line)))

    def append_rows(self, rows: Sequence[RawTelemetryRow]) -> int:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")
        self._rows.extend(rows)
        return len(rows)

    def all(self) -> list[RawTelemetryRow]:
        return list(self._rows)

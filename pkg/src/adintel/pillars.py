"""Content-pillar extraction: one structured attribute record per ad.

Audience and insight are hard-required because the downstream persona and
theme mining cluster on them; the remaining six attributes may come back
as "unknown".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Optional

from .errors import ExtractionFailed
from .gateway import CompletionRequest, Gateway
from .store import AdCreative

PILLAR_FIELDS = (
    "audience", "insight", "need", "product",
    "value_proposition", "emotional_appeal", "tone", "archetype",
)

MANDATORY_FIELDS = ("audience", "insight")


@dataclass
class ContentPillars:
    ad_id: str
    audience: str
    insight: str
    need: str = "unknown"
    product: str = "unknown"
    value_proposition: str = "unknown"
    emotional_appeal: str = "unknown"
    tone: str = "unknown"
    archetype: str = "unknown"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ContentPillars":
        return cls(**{k: d[k] for k in ("ad_id",) + PILLAR_FIELDS if k in d})


@dataclass
class PillarTable:
    rows: list[ContentPillars] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def row_for(self, ad_id: str) -> Optional[ContentPillars]:
        for row in self.rows:
            if row.ad_id == ad_id:
                return row
        return None


def extract_pillars(ad: AdCreative, gateway: Gateway) -> ContentPillars:
    """Extract all eight pillar fields for one ad.

    Deterministic under the mock provider. Raises ExtractionFailed when
    validation exhausts retries or a mandatory field comes back empty.
    """
    request = CompletionRequest(
        template_id="pillar_extraction",
        bindings={
            "brand": ad.brand,
            "headline": ad.headline or "",
            "body_text": ad.body_text,
        },
        schema_id="pillar_extraction",
    )
    result = gateway.complete_structured(request)
    if result.parsed is None:
        raise ExtractionFailed(ad.id, "validation exhausted retries")
    values = {}
    for name in PILLAR_FIELDS:
        value = str(result.parsed.get(name, "") or "").strip()
        if not value and name not in MANDATORY_FIELDS:
            value = "unknown"
        if not value:
            raise ExtractionFailed(ad.id, f"{name} empty")
        values[name] = value
    return ContentPillars(ad_id=ad.id, **values)


def batch_extract(ads: Iterable[AdCreative], gateway: Gateway) -> PillarTable:
    """Extract pillars for a batch; per-ad failures are collected, never
    raised. Rows come back ordered by ad_id regardless of completion order."""
    table = PillarTable()
    for ad in ads:
        try:
            table.rows.append(extract_pillars(ad, gateway))
        except ExtractionFailed as e:
            table.failures.append((ad.id, e.reason))
    table.rows.sort(key=lambda r: r.ad_id)
    table.failures.sort(key=lambda f: f[0])
    return table


# line-delimited persistence, one record per ad

def save_table(table: PillarTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in table.rows:
            fh.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")


def load_table(path: str | Path) -> PillarTable:
    table = PillarTable()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                table.rows.append(ContentPillars.from_dict(json.loads(line)))
    return table

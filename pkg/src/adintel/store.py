"""Ad record store: ingest, dedup, filter, persist.

Persistence is an append-only JSONL log (`ads.jsonl` inside the store
directory) plus an in-memory id index rebuilt on open. The dedup key is a
content hash over (brand, whitespace-normalized body_text, sorted
media_refs), which makes ingestion idempotent: re-ingesting a file turns
every previously accepted record into a duplicate.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field, asdict
from datetime import date
from pathlib import Path
from typing import Optional

from .errors import IngestIoError, NotFound

log = logging.getLogger(__name__)

PLATFORMS = ("facebook", "instagram", "other")

IMPORT_KEYS = {
    "brand", "body_text", "headline", "media_refs",
    "first_seen", "last_seen", "platform",
}

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS.sub(" ", text).strip()


def content_id(brand: str, body_text: str, media_refs: list[str]) -> str:
    """Stable dedup hash over (brand, normalized body, sorted media refs)."""
    h = hashlib.sha256()
    h.update(brand.encode("utf-8"))
    h.update(b"\x00")
    h.update(normalize_text(body_text).encode("utf-8"))
    for ref in sorted(media_refs):
        h.update(b"\x00")
        h.update(ref.encode("utf-8"))
    return h.hexdigest()[:16]


@dataclass
class AdCreative:
    id: str
    brand: str
    body_text: str
    headline: Optional[str]
    media_refs: list[str]
    first_seen: str  # ISO-8601 date
    last_seen: str
    platform: str
    tags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AdCreative":
        return cls(
            id=d["id"],
            brand=d["brand"],
            body_text=d["body_text"],
            headline=d.get("headline"),
            media_refs=list(d.get("media_refs", [])),
            first_seen=d["first_seen"],
            last_seen=d["last_seen"],
            platform=d.get("platform", "other"),
            tags=list(d.get("tags", [])),
        )


@dataclass
class IngestReport:
    read: int = 0
    accepted: int = 0
    duplicates: int = 0
    rejected: int = 0
    reject_reasons: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "read": self.read,
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "rejected": self.rejected,
            "reject_reasons": [list(r) for r in self.reject_reasons],
        }


@dataclass
class FilterSpec:
    brands: Optional[list[str]] = None
    date_range: Optional[tuple[str, str]] = None  # (from, to) inclusive
    keyword_any: Optional[list[str]] = None
    keyword_all: Optional[list[str]] = None

    def validate(self) -> None:
        if self.date_range is not None:
            lo, hi = self.date_range
            if _parse_date(lo) > _parse_date(hi):
                raise ValueError("date_range: from must be <= to")


def _parse_date(s: str) -> date:
    return date.fromisoformat(s)


def _normalize_record(raw: dict, brand_hint: Optional[str]) -> AdCreative:
    """Turn one import-line object into an AdCreative; raises ValueError."""
    if not isinstance(raw, dict):
        raise ValueError("record is not an object")

    unknown = set(raw) - IMPORT_KEYS
    if unknown:
        log.warning("ignoring unknown keys: %s", sorted(unknown))

    brand = raw.get("brand") or brand_hint
    if not brand:
        raise ValueError("missing brand")

    body = raw.get("body_text")
    if body is None or not normalize_text(str(body)):
        raise ValueError("missing body_text")
    body = normalize_text(str(body))

    headline = raw.get("headline")
    if headline is not None:
        headline = normalize_text(str(headline)) or None

    media_refs = raw.get("media_refs") or []
    if not isinstance(media_refs, list):
        raise ValueError("media_refs must be a list")
    media_refs = sorted(str(m) for m in media_refs)

    first_seen = raw.get("first_seen")
    last_seen = raw.get("last_seen")
    if not first_seen or not last_seen:
        raise ValueError("missing first_seen/last_seen")
    try:
        d0, d1 = _parse_date(first_seen), _parse_date(last_seen)
    except ValueError:
        raise ValueError("malformed date (expected YYYY-MM-DD)")
    if d0 > d1:
        raise ValueError("first_seen after last_seen")

    platform = raw.get("platform", "other")
    if platform not in PLATFORMS:
        log.warning("unknown platform %r mapped to 'other'", platform)
        platform = "other"

    return AdCreative(
        id=content_id(brand, body, media_refs),
        brand=brand,
        body_text=body,
        headline=headline,
        media_refs=media_refs,
        first_seen=first_seen,
        last_seen=last_seen,
        platform=platform,
    )


class AdStore:
    """Append-only ad log with an in-memory id index.

    Single writer, multiple readers: ingest calls are serialized with a
    lock; reads only touch the in-memory index.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._log_path = self.root / "ads.jsonl"
        self._ads: dict[str, AdCreative] = {}
        self._write_lock = threading.Lock()
        self._load()

    def _load(self) -> None:
        self._ads.clear()
        if not self._log_path.exists():
            return
        with self._log_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                ad = AdCreative.from_dict(json.loads(line))
                self._ads[ad.id] = ad

    def __len__(self) -> int:
        return len(self._ads)

    def ingest_ads(self, source: str | Path, brand_hint: Optional[str] = None) -> IngestReport:
        """Ingest a line-delimited export file. Malformed lines are recorded
        per-line in the report; an unreadable source aborts."""
        report = IngestReport()
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as e:
            raise IngestIoError(f"cannot read {source}: {e}") from e

        with self._write_lock:
            accepted: list[AdCreative] = []
            for line_no, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                report.read += 1
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError:
                    report.rejected += 1
                    report.reject_reasons.append((line_no, "malformed line"))
                    continue
                try:
                    ad = _normalize_record(raw, brand_hint)
                except ValueError as e:
                    report.rejected += 1
                    report.reject_reasons.append((line_no, str(e)))
                    continue
                if ad.id in self._ads:
                    report.duplicates += 1
                    continue
                self._ads[ad.id] = ad
                accepted.append(ad)
                report.accepted += 1

            if accepted:
                with self._log_path.open("a", encoding="utf-8") as fh:
                    for ad in accepted:
                        fh.write(json.dumps(ad.to_dict(), ensure_ascii=False) + "\n")
        return report

    def get_ad(self, ad_id: str) -> AdCreative:
        try:
            return self._ads[ad_id]
        except KeyError:
            raise NotFound(f"no ad with id {ad_id}") from None

    def filter_ads(self, spec: Optional[FilterSpec] = None) -> list[AdCreative]:
        """Return ads satisfying every present clause, sorted by (brand, id).

        Keyword clauses are case-insensitive substring matches against
        body_text plus headline. A date_range matches ads whose
        [first_seen, last_seen] window intersects it.
        """
        spec = spec or FilterSpec()
        spec.validate()
        out = [ad for ad in self._ads.values() if _matches(ad, spec)]
        out.sort(key=lambda a: (a.brand, a.id))
        return out

    def all_ads(self) -> list[AdCreative]:
        return self.filter_ads(FilterSpec())


def _matches(ad: AdCreative, spec: FilterSpec) -> bool:
    if spec.brands is not None and ad.brand not in spec.brands:
        return False
    if spec.date_range is not None:
        lo, hi = spec.date_range
        if _parse_date(ad.last_seen) < _parse_date(lo) or _parse_date(ad.first_seen) > _parse_date(hi):
            return False
    haystack = (ad.body_text + " " + (ad.headline or "")).lower()
    if spec.keyword_any is not None:
        if not any(k.lower() in haystack for k in spec.keyword_any):
            return False
    if spec.keyword_all is not None:
        if not all(k.lower() in haystack for k in spec.keyword_all):
            return False
    return True

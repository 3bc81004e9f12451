"""Campaign brief generation: persona + challenge + offering -> story,
distilled insight, and campaign idea, driven by coverage gaps."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .errors import ExtractionFailed, NoOfferings
from .gateway import CompletionRequest, Gateway
from .insights import Challenge, CoverageMatrix, Persona, detect_gaps

INSIGHT_MAX_CHARS = 280

_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


@dataclass
class Offering:
    offering_id: str
    name: str
    description: str
    brand: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Offering":
        return cls(d["offering_id"], d["name"], d.get("description", ""), d.get("brand", ""))


@dataclass
class CampaignBrief:
    brief_id: str
    persona_ref: str
    challenge_ref: str
    offering_ref: str
    story: str
    insight: str
    idea: str
    created_at: str
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _now_iso() -> str:
    # SOURCE_DATE_EPOCH makes scripted runs reproducible
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now(tz=timezone.utc).isoformat()


class BriefStore:
    """Append-only brief log with sequential ids."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._briefs: list[CampaignBrief] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._briefs.append(CampaignBrief(**json.loads(line)))

    def next_id(self) -> str:
        return f"brief-{len(self._briefs) + 1:06d}"

    def append(self, brief: CampaignBrief) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(brief.to_dict(), ensure_ascii=False) + "\n")
        self._briefs.append(brief)

    def all(self) -> list[CampaignBrief]:
        return list(self._briefs)

    def get(self, brief_id: str) -> Optional[CampaignBrief]:
        for b in self._briefs:
            if b.brief_id == brief_id:
                return b
        return None


def generate_brief(persona: Persona, challenge: Challenge, offering: Offering,
                   gateway: Gateway, store: Optional[BriefStore] = None,
                   gap_rank: Optional[int] = None) -> CampaignBrief:
    """Generate and (when a store is given) persist one brief.

    Inputs are read-only; the brief text is deterministic under the mock
    provider while brief_id/created_at identify each generation.
    """
    request = CompletionRequest(
        template_id="campaign_brief",
        bindings={
            "persona_name": persona.name,
            "persona_description": persona.description,
            "challenge_name": challenge.name,
            "challenge_description": challenge.description,
            "offering_name": offering.name,
            "offering_brand": offering.brand,
            "offering_description": offering.description,
        },
        schema_id="campaign_brief",
    )
    result = gateway.complete_structured(request)
    if result.parsed is None:
        raise ExtractionFailed(f"{persona.persona_id}+{challenge.challenge_id}",
                               "brief validation exhausted retries")
    story = str(result.parsed["story"]).strip()
    insight = str(result.parsed["insight"]).strip()
    idea = str(result.parsed["idea"]).strip()
    if not (story and insight and idea):
        raise ExtractionFailed(f"{persona.persona_id}+{challenge.challenge_id}",
                               "empty story/insight/idea")

    brief = CampaignBrief(
        brief_id=store.next_id() if store else "brief-000000",
        persona_ref=persona.persona_id,
        challenge_ref=challenge.challenge_id,
        offering_ref=offering.offering_id,
        story=story,
        insight=insight,
        idea=idea,
        created_at=_now_iso(),
        provenance={
            "template": "campaign_brief",
            "provider_id": result.provider_id,
            "gap_rank": gap_rank,
        },
    )
    if store is not None:
        store.append(brief)
    return brief


def first_sentence(text: str) -> str:
    m = _SENTENCE_END.search(text)
    return text[:m.end()].strip() if m else text.strip()


def _is_single_sentence(text: str) -> bool:
    return first_sentence(text) == text.strip()


def distill_insight(story: str, gateway: Gateway) -> str:
    """Compress a story into one sentence of at most 280 characters.

    A multi-sentence answer triggers one corrective retry; if the provider
    still rambles, the first sentence is accepted.
    """
    if not story.strip():
        raise ValueError("story must be non-empty")

    request = CompletionRequest(
        template_id="insight_distill",
        bindings={"story": story},
        schema_id="insight_distill",
    )
    insight = ""
    for attempt, corrective in enumerate((False, True)):
        result = gateway.complete_structured(request, corrective=corrective)
        if result.parsed is None:
            raise ExtractionFailed("insight", "validation exhausted retries")
        insight = str(result.parsed["insight"]).strip()
        if _is_single_sentence(insight) and len(insight) <= INSIGHT_MAX_CHARS:
            return insight
    insight = first_sentence(insight)
    if not insight or len(insight) > INSIGHT_MAX_CHARS:
        raise ExtractionFailed("insight", "no acceptable single sentence")
    return insight


def propose_briefs(matrix: CoverageMatrix, offerings: Sequence[Offering], top_n: int,
                   gateway: Gateway, store: Optional[BriefStore] = None,
                   brand: Optional[str] = None) -> list[CampaignBrief]:
    """One brief per top-n gap cell, in gap-rank order.

    Offering choice per cell: the first offering whose brand matches the
    corpus brand under analysis, else the first offering; a UI can
    override this default.
    """
    if not offerings:
        raise NoOfferings("at least one offering required")
    offering = offerings[0]
    if brand is not None:
        for o in offerings:
            if o.brand == brand:
                offering = o
                break
    briefs = []
    for rank, (persona, challenge, _count) in enumerate(detect_gaps(matrix, top_n)):
        briefs.append(generate_brief(persona, challenge, offering, gateway,
                                     store=store, gap_rank=rank))
    return briefs


def render_brief_text(brief: CampaignBrief, persona: Persona, challenge: Challenge,
                      offering: Offering) -> str:
    """Human-readable rendering for copy-paste into agency decks."""
    return (
        f"CAMPAIGN BRIEF {brief.brief_id}\n"
        f"Persona:   {persona.name}\n"
        f"Challenge: {challenge.name}\n"
        f"Offering:  {offering.name} ({offering.brand})\n"
        f"\nSTORY\n{brief.story}\n"
        f"\nINSIGHT\n{brief.insight}\n"
        f"\nIDEA\n{brief.idea}\n"
    )

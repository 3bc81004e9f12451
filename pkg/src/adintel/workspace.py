"""Shared pipeline state over one store directory.

Both the CLI and the HTTP service drive this class, so identical inputs
produce identical results regardless of the entry point. Layout:

    <store>/ads.jsonl            ad record log
    <store>/pillars.jsonl        extracted pillar table
    <store>/clusterings/*.json   persona / challenge clusterings
    <store>/personas.jsonl       labeled personas
    <store>/challenges.jsonl     labeled challenges
    <store>/offerings.jsonl      registered offerings
    <store>/briefs.jsonl         generated briefs
    <store>/telemetry.jsonl      imported telemetry rows
    <store>/heatmaps/<id>.json   per-creative attention grids
    <store>/annotations.jsonl    accept/dismiss marks on recommendations
    <store>/embeddings.npz       embedding cache sidecar
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .briefs import BriefStore, CampaignBrief, Offering, generate_brief, propose_briefs
from .clustering import Clustering
from .creative import (AblationReport, AttentionHeatmap, SalientRegion,
                       VariantStats, degradation_report, heatmap_from_dict,
                       load_heatmap, rank_regions, read_variant_csv)
from .embeddings import EmbeddingCache, OfflineEmbedder
from .errors import EmptyInput, NotFound
from .gateway import Gateway, MockProvider, Provider
from .insights import (Challenge, CoverageMatrix, Persona, coverage_matrix,
                       detect_gaps, mine_clusters)
from .pillars import PillarTable, batch_extract, load_table, save_table
from .store import AdStore, FilterSpec, IngestReport
from .telemetry import (AnalysisPrompt, RecommendedAction, TelemetryStore,
                        TrendSeries, aggregate, build_analysis_prompt,
                        parse_recommendations, read_telemetry_csv)

MINING_KINDS = ("personas", "challenges")


@dataclass
class GatewayConfig:
    provider: str = "mock"  # mock | http
    endpoint: str = ""
    model: str = ""
    max_retries: int = 2
    timeout_s: float = 30.0
    fixtures_dir: Optional[str] = None
    api_key: Optional[str] = None

    @classmethod
    def from_file(cls, path: str | Path) -> "GatewayConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def build_provider(config: GatewayConfig) -> Provider:
    if config.provider == "mock":
        return MockProvider(fixtures_dir=config.fixtures_dir)
    if config.provider == "http":
        from .gateway import HttpProvider

        return HttpProvider(config.endpoint, config.model, api_key=config.api_key,
                            timeout_s=config.timeout_s)
    raise ValueError(f"unknown provider kind {config.provider!r}")


class Workspace:
    def __init__(self, store_dir: str | Path, gateway: Optional[Gateway] = None,
                 templates_dir: Optional[str | Path] = None,
                 embedding_dim: int = 256,
                 config: Optional[GatewayConfig] = None):
        self.root = Path(store_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config or GatewayConfig()
        self.gateway = gateway or Gateway(build_provider(self.config),
                                          templates_dir=templates_dir,
                                          max_retries=self.config.max_retries)
        self.embedder = OfflineEmbedder(dim=embedding_dim)
        self.ads = AdStore(self.root)
        self.telemetry = TelemetryStore(self.root / "telemetry.jsonl")
        self.briefs = BriefStore(self.root / "briefs.jsonl")
        (self.root / "heatmaps").mkdir(exist_ok=True)

    # -- ads ---------------------------------------------------------------

    def ingest(self, source: str | Path, brand_hint: Optional[str] = None) -> IngestReport:
        return self.ads.ingest_ads(source, brand_hint=brand_hint)

    # -- pillars -----------------------------------------------------------

    @property
    def pillars_path(self) -> Path:
        return self.root / "pillars.jsonl"

    def run_pillars(self, spec: Optional[FilterSpec] = None) -> PillarTable:
        ads = self.ads.filter_ads(spec)
        table = batch_extract(ads, self.gateway)
        save_table(table, self.pillars_path)
        return table

    def load_pillars(self) -> PillarTable:
        if not self.pillars_path.exists():
            raise NotFound("no pillar table; run pillars first")
        return load_table(self.pillars_path)

    # -- mining ------------------------------------------------------------

    def _clustering_path(self, kind: str) -> Path:
        return self.root / "clusterings" / f"{kind}.json"

    def _labels_path(self, kind: str) -> Path:
        return self.root / f"{kind}.jsonl"

    def run_mining(self, kind: str, seed: int, k_min: int = 1,
                   k_max: Optional[int] = None):
        """kind is "personas" (audience pillar) or "challenges" (insight)."""
        if kind not in MINING_KINDS:
            raise ValueError(f"kind must be one of {MINING_KINDS}")
        table = self.load_pillars()
        if not table.rows:
            raise EmptyInput("pillar table is empty")
        cache = EmbeddingCache(self.root / "embeddings.npz")
        pillar_field = "audience" if kind == "personas" else "insight"
        clustering, labeled = mine_clusters(table.rows, pillar_field, self.embedder,
                                            self.gateway, seed, k_min, k_max,
                                            cache=cache)
        cache.save()

        path = self._clustering_path(kind)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(clustering.to_dict(), ensure_ascii=False, indent=1),
                        encoding="utf-8")
        with self._labels_path(kind).open("w", encoding="utf-8") as fh:
            for item in labeled:
                fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")
        return clustering, labeled

    def load_mining(self, kind: str):
        cpath = self._clustering_path(kind)
        lpath = self._labels_path(kind)
        if not cpath.exists() or not lpath.exists():
            raise NotFound(f"no {kind} clustering; run {kind} first")
        clustering = Clustering.from_dict(json.loads(cpath.read_text(encoding="utf-8")))
        cls = Persona if kind == "personas" else Challenge
        labeled = []
        with lpath.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    labeled.append(cls(**json.loads(line)))
        return clustering, labeled

    # -- gaps / briefs -------------------------------------------------------

    def gaps(self, top_n: int = 10) -> tuple[CoverageMatrix, list]:
        try:
            p_clustering, personas = self.load_mining("personas")
            c_clustering, challenges = self.load_mining("challenges")
        except NotFound:
            raise NotFound("no clusterings") from None
        matrix = coverage_matrix(p_clustering, personas, c_clustering, challenges)
        return matrix, detect_gaps(matrix, top_n)

    # offerings are a small registry, not a log with dedup semantics
    @property
    def offerings_path(self) -> Path:
        return self.root / "offerings.jsonl"

    def add_offering(self, name: str, description: str, brand: str) -> Offering:
        existing = self.list_offerings()
        offering = Offering(f"offering-{len(existing) + 1:04d}", name, description, brand)
        with self.offerings_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(offering.to_dict(), ensure_ascii=False) + "\n")
        return offering

    def list_offerings(self) -> list[Offering]:
        if not self.offerings_path.exists():
            return []
        out = []
        with self.offerings_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(Offering.from_dict(json.loads(line)))
        return out

    def get_offering(self, offering_id: str) -> Offering:
        for o in self.list_offerings():
            if o.offering_id == offering_id:
                return o
        raise NotFound(f"no offering {offering_id}")

    def make_brief(self, persona_id: str, challenge_id: str, offering_id: str) -> CampaignBrief:
        _, personas = self.load_mining("personas")
        _, challenges = self.load_mining("challenges")
        persona = next((p for p in personas if p.persona_id == persona_id), None)
        challenge = next((c for c in challenges if c.challenge_id == challenge_id), None)
        if persona is None:
            raise NotFound(f"no persona {persona_id}")
        if challenge is None:
            raise NotFound(f"no challenge {challenge_id}")
        offering = self.get_offering(offering_id)
        return generate_brief(persona, challenge, offering, self.gateway, store=self.briefs)

    def propose(self, top_n: int, brand: Optional[str] = None) -> list[CampaignBrief]:
        matrix, _ = self.gaps(top_n)
        return propose_briefs(matrix, self.list_offerings(), top_n, self.gateway,
                              store=self.briefs, brand=brand)

    # -- telemetry -------------------------------------------------------------

    def import_telemetry(self, csv_path: str | Path) -> int:
        return self.telemetry.append_rows(read_telemetry_csv(csv_path))

    def analyze_telemetry(self, granularity: str,
                          creatives: Sequence[tuple[str, str]] = (),
                          run_provider: bool = True,
                          ) -> tuple[TrendSeries, AnalysisPrompt, list[RecommendedAction]]:
        rows = self.telemetry.all()
        if not rows:
            raise EmptyInput("no telemetry")
        series = aggregate(rows, granularity)
        prompt = build_analysis_prompt(series, creatives=creatives)
        actions: list[RecommendedAction] = []
        if run_provider:
            from .gateway import CompletionRequest

            request = CompletionRequest(
                template_id="telemetry_analysis",
                bindings={
                    "knowledge_text": prompt.sections["knowledge"],
                    "role_text": prompt.sections["role"],
                    "task_text": prompt.sections["task"],
                    "data_table": prompt.sections["data"],
                },
                schema_id="recommendations",
                image_refs=[ref for ref, _ in creatives],
                image_payloads=list(creatives),
            )
            result = self.gateway.complete_structured(request)
            if result.raw_text:
                actions = parse_recommendations(result.raw_text)

        # exports: prompt as plain text, actions line-delimited
        (self.root / "analysis_prompt.txt").write_text(prompt.text, encoding="utf-8")
        with (self.root / "actions.jsonl").open("a", encoding="utf-8") as fh:
            for action in actions:
                fh.write(json.dumps(action.to_dict(), ensure_ascii=False) + "\n")
        return series, prompt, actions

    # -- creatives ----------------------------------------------------------------

    def heatmap_path(self, creative_id: str) -> Path:
        return self.root / "heatmaps" / f"{creative_id}.json"

    def put_heatmap(self, obj: dict) -> AttentionHeatmap:
        heatmap = heatmap_from_dict(obj)
        self.heatmap_path(heatmap.creative_id).write_text(
            json.dumps(heatmap.to_dict()), encoding="utf-8")
        return heatmap

    def get_heatmap(self, creative_id: str) -> AttentionHeatmap:
        path = self.heatmap_path(creative_id)
        if not path.exists():
            raise NotFound(f"no heatmap for creative {creative_id}")
        return load_heatmap(path)

    def regions(self, creative_id: str, threshold: float) -> list[SalientRegion]:
        return rank_regions(self.get_heatmap(creative_id), threshold)

    def ablation_from_rows(self, rows: list[VariantStats]) -> AblationReport:
        original = next((r for r in rows if r.label == "original"), None)
        if original is None:
            raise ValueError('variant csv needs a row labeled "original"')
        variants = [r for r in rows if r is not original]
        return degradation_report(original, variants)

    def ablation_from_csvs(self, original_csv: str | Path,
                           variants_csv: str | Path) -> AblationReport:
        originals = read_variant_csv(original_csv)
        if len(originals) != 1:
            raise ValueError("original csv must contain exactly one row")
        return degradation_report(originals[0], read_variant_csv(variants_csv))

    # -- annotations ---------------------------------------------------------------

    @property
    def annotations_path(self) -> Path:
        return self.root / "annotations.jsonl"

    def annotate(self, ref: str, status: str) -> dict:
        if status not in ("accept", "dismiss"):
            raise ValueError("status must be accept or dismiss")
        entry = {"ref": ref, "status": status}
        with self.annotations_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return entry

    def list_annotations(self) -> list[dict]:
        if not self.annotations_path.exists():
            return []
        out = []
        with self.annotations_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(json.loads(line))
        return out

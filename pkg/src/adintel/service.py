"""HTTP facade over the pipeline workspace.

Long-running pipeline steps run as async jobs on a bounded worker pool
with polling; at most one job of each kind runs per store (409 otherwise).
All routes live under /api/v1 except the health probe.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .errors import (AdIntelError, EmptyInput, NoActionsFound, NotFound,
                     ProviderTimeout, ProviderUnavailable)
from .creative import report_to_csv
from .store import FilterSpec
from .workspace import GatewayConfig, Workspace

JOB_KINDS = ("ingest", "pillars", "personas", "challenges", "briefs",
             "telemetry_analysis")


@dataclass
class JobHandle:
    job_id: str
    kind: str
    state: str = "queued"  # queued -> running -> done | failed
    result_ref: Optional[str] = None
    error: Optional[str] = None
    result: Optional[dict] = None

    def to_dict(self, include_result: bool = True) -> dict:
        out = {
            "job_id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "result_ref": self.result_ref,
            "error": self.error,
        }
        if include_result and self.state == "done":
            out["result"] = self.result
        return out


class JobManager:
    """Bounded worker pool; one active job per kind."""

    def __init__(self, max_workers: int = 2):
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, JobHandle] = {}
        self._active: dict[str, str] = {}  # kind -> job_id
        self._lock = threading.Lock()

    def submit(self, kind: str, fn: Callable[[], dict]) -> JobHandle:
        with self._lock:
            active_id = self._active.get(kind)
            if active_id and self._jobs[active_id].state in ("queued", "running"):
                raise HTTPException(409, detail={"errors": [f"{kind} job already active"]})
            job = JobHandle(job_id=uuid.uuid4().hex[:12], kind=kind)
            self._jobs[job.job_id] = job
            self._active[kind] = job.job_id

        def run():
            job.state = "running"
            try:
                job.result = fn()
                job.result_ref = f"/api/v1/pipeline/jobs/{job.job_id}"
                job.state = "done"
            except AdIntelError as e:
                job.error = str(e)
                job.state = "failed"
            except Exception as e:  # keep the pool alive on surprises
                job.error = f"internal: {e}"
                job.state = "failed"

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> JobHandle:
        job = self._jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail={"errors": [f"no job {job_id}"]})
        return job


class FilterBody(BaseModel):
    brands: Optional[list[str]] = None
    date_from: Optional[str] = None
    date_to: Optional[str] = None
    keyword_any: Optional[list[str]] = None
    keyword_all: Optional[list[str]] = None

    def to_spec(self) -> FilterSpec:
        date_range = None
        if self.date_from and self.date_to:
            date_range = (self.date_from, self.date_to)
        return FilterSpec(brands=self.brands, date_range=date_range,
                          keyword_any=self.keyword_any, keyword_all=self.keyword_all)


class PillarsBody(BaseModel):
    filter: FilterBody = FilterBody()


class MiningBody(BaseModel):
    filter: FilterBody = FilterBody()
    seed: int
    k_min: int = 1
    k_max: Optional[int] = None


class BriefBody(BaseModel):
    persona_id: str
    challenge_id: str
    offering_id: str


class OfferingBody(BaseModel):
    name: str
    description: str = ""
    brand: str = ""


class DistillBody(BaseModel):
    story: str


class AnalyzeBody(BaseModel):
    granularity: str = "weekly"


class AnnotationBody(BaseModel):
    ref: str
    status: str


def create_app(store_dir: str, config: Optional[GatewayConfig] = None,
               templates_dir: Optional[str] = None,
               token: Optional[str] = None,
               console_origin: str = "*") -> FastAPI:
    ws = Workspace(store_dir, config=config, templates_dir=templates_dir)
    jobs = JobManager()
    ingest_lock = threading.Lock()

    app = FastAPI(title="adintel", version="0.1.0")
    app.state.workspace = ws
    app.state.jobs = jobs
    app.state.ingest_lock = ingest_lock
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[console_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        errors = [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.exception_handler(HTTPException)
    async def on_http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        content = detail if isinstance(detail, dict) and "errors" in detail \
            else {"errors": [str(detail)]}
        return JSONResponse(status_code=exc.status_code, content=content)

    @app.exception_handler(AdIntelError)
    async def on_domain_error(request: Request, exc: AdIntelError):
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, (ProviderUnavailable, ProviderTimeout)):
            status = 503
        else:
            status = 400
        return JSONResponse(status_code=status, content={"errors": [str(exc)]})

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if token and request.url.path != "/healthz":
            if request.headers.get("Authorization") != f"Bearer {token}":
                return JSONResponse(status_code=401, content={"errors": ["bad token"]})
        return await call_next(request)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True}

    # -- ads ------------------------------------------------------------

    @app.post("/api/v1/ads/ingest")
    async def ingest(file: UploadFile, brand_hint: Optional[str] = None):
        if not ingest_lock.acquire(blocking=False):
            raise HTTPException(409, detail={"errors": ["ingest already in progress"]})
        try:
            import tempfile

            with tempfile.NamedTemporaryFile(suffix=".jsonl", delete=False) as tmp:
                tmp.write(await file.read())
                path = tmp.name
            report = ws.ingest(path, brand_hint=brand_hint)
            return report.to_dict()
        finally:
            ingest_lock.release()

    @app.get("/api/v1/ads")
    async def list_ads(brand: Optional[str] = None, keyword: Optional[str] = None):
        spec = FilterSpec(
            brands=[brand] if brand else None,
            keyword_any=[keyword] if keyword else None,
        )
        return [ad.to_dict() for ad in ws.ads.filter_ads(spec)]

    # -- pipeline jobs -----------------------------------------------------

    @app.post("/api/v1/pipeline/pillars")
    async def pipeline_pillars(body: PillarsBody):
        spec = body.filter.to_spec()

        def run():
            table = ws.run_pillars(spec)
            return {
                "rows": len(table.rows),
                "failures": [list(f) for f in table.failures],
            }

        return jobs.submit("pillars", run).to_dict()

    def _mining_job(kind: str, body: MiningBody):
        def run():
            import math

            clustering, labeled = ws.run_mining(kind, seed=body.seed,
                                                k_min=body.k_min, k_max=body.k_max)
            return {
                kind: [item.to_dict() for item in labeled],
                "clustering": {
                    "k": clustering.k,
                    "seed": clustering.seed,
                    # degenerate (zero-variance) clusterings carry +inf,
                    # which JSON responses cannot represent
                    "bic": clustering.bic if math.isfinite(clustering.bic) else None,
                    "sizes": clustering.sizes(),
                },
            }

        return jobs.submit(kind, run).to_dict()

    @app.post("/api/v1/pipeline/personas")
    async def pipeline_personas(body: MiningBody):
        return _mining_job("personas", body)

    @app.post("/api/v1/pipeline/challenges")
    async def pipeline_challenges(body: MiningBody):
        return _mining_job("challenges", body)

    @app.get("/api/v1/pipeline/jobs/{job_id}")
    async def job_status(job_id: str):
        return jobs.get(job_id).to_dict()

    # -- gaps / offerings / briefs ---------------------------------------------

    @app.get("/api/v1/gaps")
    async def gaps(top_n: int = 10):
        try:
            matrix, ranked = ws.gaps(top_n)
        except NotFound:
            raise HTTPException(400, detail={"errors": ["no clusterings"]})
        return {
            "matrix": matrix.to_dict(),
            "gaps": [
                {"persona_id": p.persona_id, "challenge_id": c.challenge_id,
                 "persona_name": p.name, "challenge_name": c.name, "count": n}
                for p, c, n in ranked
            ],
        }

    @app.post("/api/v1/offerings")
    async def add_offering(body: OfferingBody):
        return ws.add_offering(body.name, body.description, body.brand).to_dict()

    @app.get("/api/v1/offerings")
    async def list_offerings():
        return [o.to_dict() for o in ws.list_offerings()]

    @app.post("/api/v1/briefs")
    async def make_brief(body: BriefBody):
        brief = ws.make_brief(body.persona_id, body.challenge_id, body.offering_id)
        return brief.to_dict()

    @app.get("/api/v1/briefs")
    async def list_briefs():
        return [b.to_dict() for b in ws.briefs.all()]

    @app.post("/api/v1/briefs/distill")
    async def distill(body: DistillBody):
        from .briefs import distill_insight

        if not body.story.strip():
            raise HTTPException(400, detail={"errors": ["story must be non-empty"]})
        return {"insight": distill_insight(body.story, ws.gateway)}

    # -- telemetry ------------------------------------------------------------

    @app.post("/api/v1/telemetry/import")
    async def telemetry_import(file: UploadFile):
        import tempfile

        with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as tmp:
            tmp.write(await file.read())
            path = tmp.name
        try:
            count = ws.import_telemetry(path)
        except ValueError as e:
            raise HTTPException(400, detail={"errors": [str(e)]})
        return {"rows": count}

    @app.post("/api/v1/telemetry/analyze")
    async def telemetry_analyze(body: AnalyzeBody):
        try:
            series, prompt, actions = ws.analyze_telemetry(body.granularity)
        except EmptyInput:
            raise HTTPException(400, detail={"errors": ["no telemetry"]})
        except NoActionsFound:
            raise HTTPException(400, detail={"errors": ["no actions found"]})
        except ValueError as e:
            raise HTTPException(400, detail={"errors": [str(e)]})
        return {
            "series": series.to_dict(),
            "prompt": {
                "sections": prompt.sections,
                "guiding_questions": list(prompt.guiding_questions),
                "text": prompt.text,
            },
            "actions": [a.to_dict() for a in actions],
        }

    # -- creatives ---------------------------------------------------------------

    @app.put("/api/v1/creatives/{creative_id}/heatmap")
    async def put_heatmap(creative_id: str, body: dict):
        body = dict(body)
        body.setdefault("creative_id", creative_id)
        if body["creative_id"] != creative_id:
            raise HTTPException(400, detail={"errors": ["creative_id mismatch"]})
        return ws.put_heatmap(body).to_dict()

    @app.get("/api/v1/creatives/{creative_id}/heatmap")
    async def get_heatmap(creative_id: str):
        return ws.get_heatmap(creative_id).to_dict()

    @app.get("/api/v1/creatives/{creative_id}/regions")
    async def get_regions(creative_id: str, threshold: float = 0.6):
        try:
            regions = ws.regions(creative_id, threshold)
        except ValueError as e:
            raise HTTPException(400, detail={"errors": [str(e)]})
        return [r.to_dict() for r in regions]

    @app.post("/api/v1/creatives/{creative_id}/ablation-report")
    async def ablation_report(creative_id: str, request: Request,
                              format: str = "json"):
        import csv as _csv
        import io as _io

        from .creative import VariantStats

        text = (await request.body()).decode("utf-8")
        try:
            reader = _csv.DictReader(_io.StringIO(text))
            rows = []
            for rec in reader:
                stats = VariantStats(
                    variant_id=rec["variant_id"], label=rec["label"],
                    impressions=int(rec["impressions"]), clicks=int(rec["clicks"]),
                    lpv=int(rec["lpv"]), results=int(rec["results"]),
                    removed_elements=[e for e in rec.get("removed_elements", "").split(";") if e],
                )
                stats.validate()
                rows.append(stats)
            report = ws.ablation_from_rows(rows)
        except (KeyError, ValueError, TypeError) as e:
            raise HTTPException(400, detail={"errors": [f"bad variant csv: {e}"]})
        if format == "csv":
            return PlainTextResponse(report_to_csv(report), media_type="text/csv")
        return report.to_dict()

    # -- annotations ----------------------------------------------------------------

    @app.post("/api/v1/annotations")
    async def annotate(body: AnnotationBody):
        try:
            return ws.annotate(body.ref, body.status)
        except ValueError as e:
            raise HTTPException(400, detail={"errors": [str(e)]})

    @app.get("/api/v1/annotations")
    async def list_annotations():
        return ws.list_annotations()

    return app

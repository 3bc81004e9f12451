"""Batch driver mirroring the HTTP service (same Workspace core).

Exit codes: 0 success, 1 domain error, 2 usage error. With --output json,
stdout carries only the machine-readable result; diagnostics go to stderr.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .briefs import render_brief_text
from .creative import load_heatmap, rank_regions, report_to_csv
from .errors import AdIntelError
from .store import FilterSpec
from .workspace import GatewayConfig, Workspace


def _echo_result(ctx: click.Context, payload, text_render=None) -> None:
    output = ctx.obj["output"]
    if output == "json":
        click.echo(json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True))
    elif text_render is not None:
        click.echo(text_render)
    else:
        click.echo(json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True))


def _workspace(ctx: click.Context) -> Workspace:
    if ctx.obj.get("workspace") is None:
        config = ctx.obj["config"]
        ctx.obj["workspace"] = Workspace(ctx.obj["store"], config=config,
                                         templates_dir=ctx.obj.get("templates"))
    return ctx.obj["workspace"]


class _DomainErrorGroup(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except AdIntelError as e:
            click.echo(str(e), err=True)
            sys.exit(1)
        except ValueError as e:
            click.echo(str(e), err=True)
            sys.exit(1)


@click.group(cls=_DomainErrorGroup)
@click.option("--store", default="./adintel-store", show_default=True,
              help="Store directory.")
@click.option("--provider", type=click.Choice(["mock", "http"]), default=None,
              help="Provider kind (overrides config).")
@click.option("--templates", type=click.Path(), default=None,
              help="Extra templates directory overlay.")
@click.option("--fixtures", type=click.Path(), default=None,
              help="Canned mock responses directory.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file.")
@click.option("--output", type=click.Choice(["text", "json", "csv"]), default="text",
              show_default=True)
@click.pass_context
def main(ctx, store, provider, templates, fixtures, config_path, output):
    """Ad-corpus intelligence pipeline."""
    config = GatewayConfig.from_file(config_path) if config_path else GatewayConfig()
    if provider:
        config.provider = provider
    if fixtures:
        config.fixtures_dir = fixtures
    if config.api_key is None:
        config.api_key = os.environ.get("ADINTEL_API_KEY")
    ctx.obj = {"store": store, "templates": templates, "config": config,
               "output": output, "workspace": None}


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.option("--brand-hint", default=None)
@click.pass_context
def ingest(ctx, source, brand_hint):
    """Ingest a line-delimited ad export file."""
    report = _workspace(ctx).ingest(source, brand_hint=brand_hint)
    _echo_result(ctx, report.to_dict(),
                 f"read={report.read} accepted={report.accepted} "
                 f"duplicates={report.duplicates} rejected={report.rejected}")


def _filter_options(fn):
    fn = click.option("--brand", "brands", multiple=True)(fn)
    fn = click.option("--keyword", "keywords", multiple=True,
                      help="Match ads containing any of these keywords.")(fn)
    fn = click.option("--date-from", default=None)(fn)
    fn = click.option("--date-to", default=None)(fn)
    return fn


def _spec_from_options(brands, keywords, date_from, date_to) -> FilterSpec:
    return FilterSpec(
        brands=list(brands) or None,
        keyword_any=list(keywords) or None,
        date_range=(date_from, date_to) if date_from and date_to else None,
    )


@main.command()
@_filter_options
@click.pass_context
def pillars(ctx, brands, keywords, date_from, date_to):
    """Extract content pillars for the (filtered) ad corpus."""
    table = _workspace(ctx).run_pillars(_spec_from_options(brands, keywords,
                                                           date_from, date_to))
    payload = {
        "rows": [r.to_dict() for r in table.rows],
        "failures": [list(f) for f in table.failures],
    }
    _echo_result(ctx, payload,
                 f"extracted {len(table.rows)} pillar rows, {len(table.failures)} failures")


def _mining_command(kind: str):
    @click.option("--seed", type=int, required=True,
                  help="Clustering seed (required for reproducibility).")
    @click.option("--k-min", type=int, default=1, show_default=True)
    @click.option("--k-max", type=int, default=None)
    @click.pass_context
    def cmd(ctx, seed, k_min, k_max):
        clustering, labeled = _workspace(ctx).run_mining(kind, seed=seed,
                                                         k_min=k_min, k_max=k_max)
        payload = {
            kind: [item.to_dict() for item in labeled],
            "clustering": {"k": clustering.k, "seed": clustering.seed,
                           "bic": clustering.bic, "sizes": clustering.sizes()},
        }
        lines = [f"{kind}: k={clustering.k} sizes={clustering.sizes()}"]
        lines += [f"  [{item.size:4d}] {item.name}" for item in labeled]
        _echo_result(ctx, payload, "\n".join(lines))
    return cmd


main.command("personas", help="Mine personas from the audience pillar.")(
    _mining_command("personas"))
main.command("challenges", help="Mine challenge themes from the insight pillar.")(
    _mining_command("challenges"))


@main.command()
@click.option("--top", "top_n", type=int, default=10, show_default=True)
@click.pass_context
def gaps(ctx, top_n):
    """Rank persona x challenge coverage gaps."""
    matrix, ranked = _workspace(ctx).gaps(top_n)
    payload = {
        "counts": matrix.counts,
        "personas": [p.persona_id for p in matrix.personas],
        "challenges": [c.challenge_id for c in matrix.challenges],
        "gaps": [
            {"persona_id": p.persona_id, "challenge_id": c.challenge_id,
             "persona_name": p.name, "challenge_name": c.name, "count": n}
            for p, c, n in ranked
        ],
    }
    lines = [f"{n:5d}  {p.name} x {c.name}" for p, c, n in ranked]
    _echo_result(ctx, payload, "\n".join(lines) or "no gaps")


@main.command()
@click.option("--name", required=True)
@click.option("--description", default="")
@click.option("--brand", default="")
@click.pass_context
def offering(ctx, name, description, brand):
    """Register a product offering for brief generation."""
    o = _workspace(ctx).add_offering(name, description, brand)
    _echo_result(ctx, o.to_dict(), f"registered {o.offering_id}: {o.name}")


@main.command()
@click.option("--persona", "persona_id", default=None)
@click.option("--challenge", "challenge_id", default=None)
@click.option("--offering", "offering_id", default=None)
@click.option("--from-gaps", "from_gaps", type=int, default=None,
              help="Generate briefs for the top-N gap cells instead.")
@click.option("--brand", default=None, help="Prefer offerings of this brand.")
@click.pass_context
def brief(ctx, persona_id, challenge_id, offering_id, from_gaps, brand):
    """Generate a campaign brief (explicit ids, or --from-gaps N)."""
    ws = _workspace(ctx)
    if from_gaps is not None:
        briefs = ws.propose(from_gaps, brand=brand)
        payload = [b.to_dict() for b in briefs]
        _echo_result(ctx, payload, "\n".join(b.brief_id for b in briefs))
        return
    if not (persona_id and challenge_id and offering_id):
        raise click.UsageError("need --persona, --challenge and --offering "
                               "(or --from-gaps N)")
    b = ws.make_brief(persona_id, challenge_id, offering_id)
    _, personas = ws.load_mining("personas")
    _, challenges = ws.load_mining("challenges")
    persona = next(p for p in personas if p.persona_id == persona_id)
    challenge = next(c for c in challenges if c.challenge_id == challenge_id)
    text = render_brief_text(b, persona, challenge, ws.get_offering(offering_id))
    _echo_result(ctx, b.to_dict(), text)


@main.group()
def telemetry():
    """Telemetry import and analysis."""


@telemetry.command("import")
@click.argument("csv_file", type=click.Path(exists=True))
@click.pass_context
def telemetry_import(ctx, csv_file):
    count = _workspace(ctx).import_telemetry(csv_file)
    _echo_result(ctx, {"rows": count}, f"imported {count} rows")


@telemetry.command("analyze")
@click.option("--granularity", type=click.Choice(["weekly", "daily", "creative"]),
              default="weekly", show_default=True)
@click.option("--creative", "creative_paths", multiple=True,
              type=click.Path(exists=True),
              help="Creative image(s) to encode into the prompt (512x512).")
@click.option("--no-provider", is_flag=True, default=False,
              help="Assemble the prompt without calling the provider.")
@click.pass_context
def telemetry_analyze(ctx, granularity, creative_paths, no_provider):
    from .telemetry import encode_creative

    creatives = [encode_creative(p) for p in creative_paths]
    series, prompt, actions = _workspace(ctx).analyze_telemetry(
        granularity, creatives=creatives, run_provider=not no_provider)
    payload = {
        "series": series.to_dict(),
        "prompt": {"sections": prompt.sections,
                   "guiding_questions": list(prompt.guiding_questions),
                   "text": prompt.text},
        "actions": [a.to_dict() for a in actions],
    }
    lines = [prompt.text]
    if actions:
        lines.append("recommended actions:")
        lines += [f"  [{a.kind}/{a.confidence}] {a.description}" for a in actions]
    _echo_result(ctx, payload, "\n".join(lines))


@main.group()
def heatmap():
    """Attention heatmap tools."""


@heatmap.command("regions")
@click.argument("heatmap_file", type=click.Path(exists=True))
@click.option("--threshold", type=float, default=0.6, show_default=True)
@click.pass_context
def heatmap_regions(ctx, heatmap_file, threshold):
    regions = rank_regions(load_heatmap(heatmap_file), threshold)
    payload = [r.to_dict() for r in regions]
    lines = [f"{r.region_id}: bbox={r.bbox} mass={r.mass:.3f} peak={r.peak:.3f}"
             for r in regions]
    _echo_result(ctx, payload, "\n".join(lines) or "no regions above threshold")


@main.group()
def ablation():
    """Variant degradation reports."""


@ablation.command("report")
@click.argument("original_csv", type=click.Path(exists=True))
@click.argument("variants_csv", type=click.Path(exists=True))
@click.pass_context
def ablation_report(ctx, original_csv, variants_csv):
    report = _workspace(ctx).ablation_from_csvs(original_csv, variants_csv)
    if ctx.obj["output"] == "json":
        _echo_result(ctx, report.to_dict())
    else:
        click.echo(report_to_csv(report), nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP service over this store."""
    import uvicorn

    from .service import create_app

    app = create_app(ctx.obj["store"], config=ctx.obj["config"],
                     templates_dir=ctx.obj.get("templates"),
                     token=os.environ.get("ADINTEL_TOKEN"))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

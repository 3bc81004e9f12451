"""adintel: ad-corpus intelligence pipeline.

Submodules:
    store       ingest / dedup / filter normalized ad records
    gateway     provider interface, templating, structured output, mock
    pillars     per-ad content-pillar extraction
    embeddings  pluggable text embeddings with a sidecar cache
    clustering  seeded k-means, BIC, X-Means
    insights    persona / challenge mining, coverage matrix, gap detection
    briefs      persona x challenge x offering campaign briefs
    creative    attention heatmaps, salient regions, ablation reports
    telemetry   derived campaign metrics, trends, analysis prompts
    service     HTTP facade
    cli         batch driver
"""

__version__ = "0.1.0"

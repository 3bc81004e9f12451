"""Persona and challenge mining on top of the clustering core.

Personas come from clustering the audience pillar, challenges from the
insight pillar. Each cluster is labeled through the gateway; when the
provider is down or keeps failing validation, a frequency-token fallback
label is used and flagged, so mining degrades instead of aborting.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, asdict
from typing import Literal, Optional, Sequence

import numpy as np

from .clustering import Clustering, xmeans
from .embeddings import Embedder, EmbeddingCache, EmbeddingVector, embed_texts
from .errors import DisjointUniverses, ProviderUnavailable
from .gateway import CompletionRequest, Gateway
from .pillars import ContentPillars

MAX_EXEMPLARS = 5

_WORD = re.compile(r"[a-z0-9]{4,}")


@dataclass
class Persona:
    persona_id: str
    name: str
    description: str
    size: int
    cluster_index: int
    exemplar_ad_ids: list[str] = field(default_factory=list)
    auto_labeled: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Challenge:
    challenge_id: str
    name: str
    description: str
    size: int
    cluster_index: int
    exemplar_ad_ids: list[str] = field(default_factory=list)
    auto_labeled: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CoverageMatrix:
    personas: list[Persona]
    challenges: list[Challenge]
    counts: list[list[int]]
    intersection_size: int = 0

    def to_dict(self) -> dict:
        return {
            "personas": [p.to_dict() for p in self.personas],
            "challenges": [c.to_dict() for c in self.challenges],
            "counts": self.counts,
            "intersection_size": self.intersection_size,
        }


def _top_tokens(texts: Sequence[str], n: int = 4) -> list[str]:
    counts: Counter[str] = Counter()
    for t in texts:
        counts.update(_WORD.findall(t.lower()))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:n]]


def synthesize_persona(cluster_members: Sequence[ContentPillars],
                       pillar_field: Literal["audience", "insight"],
                       gateway: Gateway, cluster_index: int,
                       exemplar_ad_ids: Optional[Sequence[str]] = None):
    """Label one cluster through the gateway; returns a Persona for the
    audience pillar, a Challenge for the insight pillar.

    Size and exemplars are computed locally, never by the provider. On
    provider failure the cluster keeps a deterministic fallback name built
    from its most frequent tokens, flagged auto_labeled.
    """
    if not cluster_members:
        raise ValueError("empty cluster")
    texts = [getattr(m, pillar_field) for m in cluster_members]
    member_ids = [m.ad_id for m in cluster_members]
    exemplars = list(exemplar_ad_ids or member_ids)[:MAX_EXEMPLARS]

    template_id = "persona_label" if pillar_field == "audience" else "challenge_label"
    request = CompletionRequest(
        template_id=template_id,
        bindings={
            "size": str(len(cluster_members)),
            "member_texts": "\n".join(f"- {t}" for t in sorted(set(texts))[:40]),
        },
        schema_id="cluster_label",
    )
    auto_labeled = False
    try:
        result = gateway.complete_structured(request)
        parsed = result.parsed
    except ProviderUnavailable:
        parsed = None
    if parsed and str(parsed.get("name", "")).strip():
        name = str(parsed["name"]).strip()
        description = str(parsed.get("description", "")).strip() or name
    else:
        name = f"Cluster {cluster_index}"
        description = "frequent terms: " + ", ".join(_top_tokens(texts) or ["none"])
        auto_labeled = True

    common = dict(
        name=name,
        description=description,
        size=len(cluster_members),
        cluster_index=cluster_index,
        exemplar_ad_ids=exemplars,
        auto_labeled=auto_labeled,
    )
    if pillar_field == "audience":
        return Persona(persona_id=f"persona-{cluster_index:03d}", **common)
    return Challenge(challenge_id=f"challenge-{cluster_index:03d}", **common)


def _exemplars_by_distance(clustering: Clustering, vectors: Sequence[EmbeddingVector],
                           cluster: int) -> list[str]:
    centroid = np.asarray(clustering.centroids[cluster])
    scored = []
    for v in vectors:
        if clustering.assignments.get(v.ad_id) == cluster:
            d = float(((np.asarray(v.values) - centroid) ** 2).sum())
            scored.append((d, v.ad_id))
    scored.sort()
    return [ad_id for _, ad_id in scored[:MAX_EXEMPLARS]]


def mine_clusters(rows: Sequence[ContentPillars], pillar_field: Literal["audience", "insight"],
                  embedder: Embedder, gateway: Gateway, seed: int,
                  k_min: int = 1, k_max: Optional[int] = None,
                  cache: Optional[EmbeddingCache] = None):
    """Embed one pillar across all rows, cluster, and label every cluster.

    Returns (clustering, labeled) where labeled is a list of Persona or
    Challenge in cluster-index order.
    """
    texts = [(r.ad_id, getattr(r, pillar_field)) for r in rows]
    vectors = embed_texts(texts, embedder, cache=cache)
    clustering = xmeans(vectors, k_min=k_min, k_max=k_max, seed=seed)
    by_id = {r.ad_id: r for r in rows}
    labeled = []
    for c in range(clustering.k):
        member_ids = clustering.members(c)
        members = [by_id[i] for i in member_ids]
        exemplars = _exemplars_by_distance(clustering, vectors, c)
        labeled.append(synthesize_persona(members, pillar_field, gateway, c,
                                          exemplar_ad_ids=exemplars))
    return clustering, labeled


def mine_personas(rows, embedder, gateway, seed, k_min=1, k_max=None, cache=None):
    return mine_clusters(rows, "audience", embedder, gateway, seed, k_min, k_max, cache)


def mine_challenges(rows, embedder, gateway, seed, k_min=1, k_max=None, cache=None):
    return mine_clusters(rows, "insight", embedder, gateway, seed, k_min, k_max, cache)


def coverage_matrix(persona_clustering: Clustering, personas: Sequence[Persona],
                    challenge_clustering: Clustering, challenges: Sequence[Challenge],
                    ) -> CoverageMatrix:
    """Count ads per (persona, challenge) pairing over the shared ad set."""
    common = set(persona_clustering.assignments) & set(challenge_clustering.assignments)
    if not common:
        raise DisjointUniverses("clusterings share no ad ids")
    counts = [[0] * len(challenges) for _ in personas]
    for ad_id in common:
        p = persona_clustering.assignments[ad_id]
        c = challenge_clustering.assignments[ad_id]
        counts[p][c] += 1
    return CoverageMatrix(list(personas), list(challenges), counts,
                          intersection_size=len(common))


def detect_gaps(matrix: CoverageMatrix, top_n: int) -> list[tuple[Persona, Challenge, int]]:
    """Lowest-coverage cells first; ties break on (persona, challenge) index."""
    cells = [
        (matrix.counts[p][c], p, c)
        for p in range(len(matrix.personas))
        for c in range(len(matrix.challenges))
    ]
    cells.sort()
    return [
        (matrix.personas[p], matrix.challenges[c], count)
        for count, p, c in cells[:max(0, top_n)]
    ]

"""Clustering core: seeded k-means++, Lloyd iteration, a pooled spherical-
Gaussian BIC, and X-Means split search for choosing the cluster count.

Determinism contract: the RNG is keyed on (seed, sorted ad ids), and all
iteration orders are fixed, so results are bit-reproducible for a given
seed and independent of input vector order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .embeddings import EmbeddingVector
from .errors import TooFewPoints


@dataclass
class Clustering:
    k: int
    centroids: list[list[float]]
    assignments: dict[str, int]  # ad_id -> cluster index
    bic: float
    seed: int
    iterations: int
    inertia: float = 0.0
    inertia_history: list[float] = field(default_factory=list)

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for c in self.assignments.values():
            counts[c] += 1
        return counts

    def members(self, cluster: int) -> list[str]:
        return sorted(a for a, c in self.assignments.items() if c == cluster)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "bic": self.bic,
            "iterations": self.iterations,
            "inertia": self.inertia,
            "centroids": self.centroids,
            "assignments": dict(sorted(self.assignments.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Clustering":
        return cls(
            k=d["k"],
            centroids=[list(c) for c in d["centroids"]],
            assignments=dict(d["assignments"]),
            bic=d["bic"],
            seed=d["seed"],
            iterations=d["iterations"],
            inertia=d.get("inertia", 0.0),
        )


class BicResult(NamedTuple):
    value: float
    degenerate: bool


def _derive_rng(seed: int, ad_ids: Sequence[str]) -> np.random.Generator:
    # keying on content makes init independent of input order
    h = hashlib.sha256(str(seed).encode())
    for ad_id in ad_ids:
        h.update(b"\x00")
        h.update(ad_id.encode("utf-8"))
    return np.random.default_rng(int.from_bytes(h.digest()[:8], "big"))


def _sorted_matrix(vectors: Sequence[EmbeddingVector]) -> tuple[list[str], np.ndarray]:
    vs = sorted(vectors, key=lambda v: v.ad_id)
    ids = [v.ad_id for v in vs]
    X = np.asarray([np.asarray(v.values, dtype=np.float64) for v in vs])
    return ids, X


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _assign(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # argmin returns the first (lowest-index) minimum, our tie rule
    return np.argmin(_sq_dists(X, C), axis=1)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    chosen = [int(rng.integers(n))]
    centers[0] = X[chosen[0]]
    d2 = np.einsum("nd,nd->n", X - centers[0], X - centers[0])
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining mass on already-chosen points; take the first unused
            idx = next(i for i in range(n) if i not in chosen)
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        centers[j] = X[idx]
        cand = np.einsum("nd,nd->n", X - centers[j], X - centers[j])
        d2 = np.minimum(d2, cand)
    return centers


def _update_centroids(X: np.ndarray, labels: np.ndarray, k: int,
                      prev: np.ndarray) -> np.ndarray:
    C = np.empty_like(prev)
    empties = []
    for j in range(k):
        mask = labels == j
        if mask.any():
            C[j] = X[mask].mean(axis=0)
        else:
            empties.append(j)
            C[j] = prev[j]
    if empties:
        # repair: reseed each empty cluster with the point farthest from
        # its current centroid (deterministic: argmax takes first max)
        for j in empties:
            d = _sq_dists(X, C)
            per_point = d[np.arange(len(X)), labels]
            far = int(np.argmax(per_point))
            C[j] = X[far]
            labels = _assign(X, C)
    return C


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray, int, list[float]]:
    """Iterate update/assign until assignment fixpoint; returns final
    (centroids, labels, iterations, inertia history). The returned labels
    are always freshly assigned against the returned centroids."""
    k = C.shape[0]
    labels = _assign(X, C)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        C2 = _update_centroids(X, labels, k, C)
        labels2 = _assign(X, C2)
        d = _sq_dists(X, C2)
        history.append(float(d[np.arange(len(X)), labels2].sum()))
        converged = bool(np.array_equal(labels2, labels))
        C, labels = C2, labels2
        if converged:
            break
    return C, labels, iterations, history


def kmeans(vectors: Sequence[EmbeddingVector], k: int, seed: int,
           max_iter: int = 100) -> Clustering:
    """Lloyd iteration from k-means++ seeding to an assignment fixpoint.

    Empty clusters are repaired by reseeding with the farthest point.
    Raises TooFewPoints when there are fewer vectors (or fewer distinct
    vectors) than requested clusters.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(vectors) < k:
        raise TooFewPoints(f"{len(vectors)} vectors for k={k}")
    ids, X = _sorted_matrix(vectors)
    if len(np.unique(X, axis=0)) < k:
        raise TooFewPoints(f"fewer than k={k} distinct vectors")

    rng = _derive_rng(seed, ids)
    C0 = _kmeanspp_init(X, k, rng)
    C, labels, iterations, history = _lloyd(X, C0, max_iter)

    assignments = {ad_id: int(lbl) for ad_id, lbl in zip(ids, labels)}
    clustering = Clustering(
        k=k,
        centroids=[list(map(float, c)) for c in C],
        assignments=assignments,
        bic=0.0,
        seed=seed,
        iterations=iterations,
        inertia=history[-1] if history else 0.0,
        inertia_history=history,
    )
    clustering.bic = bic_score(vectors, clustering)
    return clustering


# ---------------------------------------------------------------------------
# BIC (identical spherical Gaussians, pooled variance)

def bic_penalty(k: int, dim: int, n: int) -> float:
    """Parameter penalty term: (free parameters)/2 * log n, with
    free parameters = k*(dim+1): centroids plus mixture weights plus the
    shared variance."""
    return (k * (dim + 1) / 2.0) * math.log(n)


def _bic_from_labels(X: np.ndarray, labels: np.ndarray) -> BicResult:
    n, d = X.shape
    ks = np.unique(labels)
    k = len(ks)
    ssd = 0.0
    size_term = 0.0
    for j in ks:
        members = X[labels == j]
        mu = members.mean(axis=0)
        ssd += float(((members - mu) ** 2).sum())
        size_term += len(members) * math.log(len(members))
    if n - k <= 0 or ssd <= 0.0:
        return BicResult(math.inf, True)
    variance = ssd / (d * (n - k))
    loglik = (size_term
              - n * math.log(n)
              - (n * d / 2.0) * math.log(2.0 * math.pi * variance)
              - d * (n - k) / 2.0)
    return BicResult(loglik - bic_penalty(k, d, n), False)


def bic_details(vectors: Sequence[EmbeddingVector], clustering: Clustering) -> BicResult:
    """BIC of a clustering; larger is better.

    Zero pooled variance (or n == k) is degenerate and reported as a +inf
    sentinel with the degenerate flag set.
    """
    ids, X = _sorted_matrix(vectors)
    labels = np.asarray([clustering.assignments[i] for i in ids])
    return _bic_from_labels(X, labels)


def bic_score(vectors: Sequence[EmbeddingVector], clustering: Clustering) -> float:
    return bic_details(vectors, clustering).value


# ---------------------------------------------------------------------------
# X-Means

def default_k_max(n: int) -> int:
    return max(1, min(20, int(math.isqrt(n))))


SPLIT_CANDIDATES = 2  # independent 2-means attempts per cluster split


def xmeans(vectors: Sequence[EmbeddingVector], k_min: int = 1,
           k_max: Optional[int] = None, seed: int = 0,
           max_iter: int = 100) -> Clustering:
    """Grow k from k_min by splitting clusters whose local BIC improves.

    Each round attempts 2-means splits of every cluster's members (a few
    independent seedings, best BIC kept) and accepts a split iff the two
    children's BIC on the member set alone beats the parent's. Rounds
    stop when nothing splits or k_max is reached; a global Lloyd
    refinement runs after every accepted round.
    """
    n = len(vectors)
    if k_max is None:
        k_max = max(k_min, default_k_max(n))
    if not (1 <= k_min <= k_max <= n):
        raise TooFewPoints(f"need 1 <= k_min <= k_max <= {n}")

    by_id = {v.ad_id: v for v in vectors}
    current = kmeans(vectors, k_min, seed, max_iter)
    total_iterations = current.iterations

    round_no = 0
    while current.k < k_max:
        round_no += 1
        groups: list[list[str]] = []
        any_split = False
        budget = k_max - current.k
        for c in range(current.k):
            member_ids = current.members(c)
            members = [by_id[i] for i in member_ids]
            if budget <= 0 or len(members) < 4:
                groups.append(member_ids)
                continue
            _, mx = _sorted_matrix(members)
            if len(np.unique(mx, axis=0)) < 2:
                groups.append(member_ids)
                continue
            ids_sorted = sorted(member_ids)
            best: Optional[tuple[float, Clustering]] = None
            for attempt in range(SPLIT_CANDIDATES):
                child_seed = (seed * 1_000_003 + round_no * 101 + c
                              + attempt * 7_919)
                try:
                    split = kmeans(members, 2, child_seed, max_iter)
                except TooFewPoints:
                    continue
                child_labels = np.asarray([split.assignments[i] for i in ids_sorted])
                child_bic = _bic_from_labels(mx, child_labels)
                if best is None or child_bic.value > best[0]:
                    best = (child_bic.value, split)
            parent_bic = _bic_from_labels(mx, np.zeros(len(members), dtype=int))
            if best is not None and best[0] > parent_bic.value:
                groups.append(best[1].members(0))
                groups.append(best[1].members(1))
                any_split = True
                budget -= 1
            else:
                groups.append(member_ids)
        if not any_split:
            break
        current = _refine(vectors, by_id, groups, seed, max_iter)
        total_iterations += current.iterations

    current.iterations = total_iterations
    return current


def _refine(vectors: Sequence[EmbeddingVector], by_id: dict[str, EmbeddingVector],
            groups: list[list[str]], seed: int, max_iter: int) -> Clustering:
    """Global Lloyd pass warm-started from the group means."""
    ids, X = _sorted_matrix(vectors)
    index = {ad_id: i for i, ad_id in enumerate(ids)}
    C0 = np.asarray([
        X[[index[i] for i in group]].mean(axis=0) for group in groups
    ])
    C, labels, iterations, history = _lloyd(X, C0, max_iter)
    clustering = Clustering(
        k=C.shape[0],
        centroids=[list(map(float, c)) for c in C],
        assignments={ad_id: int(lbl) for ad_id, lbl in zip(ids, labels)},
        bic=0.0,
        seed=seed,
        iterations=iterations,
        inertia=history[-1] if history else 0.0,
        inertia_history=history,
    )
    clustering.bic = bic_score(vectors, clustering)
    return clustering


# ---------------------------------------------------------------------------
# validation

def validate_clustering(vectors: Sequence[EmbeddingVector], clustering: Clustering,
                        tol: float = 1e-9) -> list[str]:
    """Check the clustering invariants over every point; returns a list of
    violations (empty when valid)."""
    issues: list[str] = []
    ids = {v.ad_id for v in vectors}
    assigned = set(clustering.assignments)
    if ids != assigned:
        issues.append("assignments do not cover the vector universe exactly")
    sizes = [0] * clustering.k
    for ad_id, c in clustering.assignments.items():
        if not (0 <= c < clustering.k):
            issues.append(f"{ad_id}: cluster {c} out of range")
    C = np.asarray(clustering.centroids)
    for v in sorted(vectors, key=lambda v: v.ad_id):
        c = clustering.assignments.get(v.ad_id)
        if c is None or not (0 <= c < clustering.k):
            continue
        sizes[c] += 1
        x = np.asarray(v.values, dtype=np.float64)
        dists = [float(((x - C[j]) ** 2).sum()) for j in range(clustering.k)]
        dc = dists[c]
        scale = max(1.0, dc)
        for j, dj in enumerate(dists):
            if dj < dc - tol * scale:
                issues.append(f"{v.ad_id}: cluster {j} is nearer than assigned {c}")
                break
            # only exact equality counts as a tie; near-ties within tol are
            # accepted either way (validator floats may differ in the last bit)
            if j < c and dj == dc:
                issues.append(f"{v.ad_id}: tie with lower cluster {j} not broken downward")
                break
    for j, s in enumerate(sizes):
        if s == 0:
            issues.append(f"cluster {j} is empty")
    return issues

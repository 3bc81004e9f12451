"""Text embeddings with a pluggable provider and a binary sidecar cache.

The offline embedder hashes character 3-grams of lowercased tokens
(fastText-style ``#tok#`` padding) into a fixed number of buckets and
L2-normalizes the counts. It needs no network and is a pure function of
the text, which keeps every clustering run reproducible in tests.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Protocol

import numpy as np

from .errors import EmptyText, ProviderTimeout, ProviderUnavailable

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass
class EmbeddingVector:
    ad_id: str
    values: np.ndarray
    dim: int
    provider_id: str


class Embedder(Protocol):
    provider_id: str
    dim: int

    def embed(self, text: str) -> np.ndarray:
        ...


def _bucket(gram: str, dim: int) -> int:
    digest = hashlib.sha1(gram.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % dim


class OfflineEmbedder:
    """Hashed bag of token character-3-grams, L2-normalized."""

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.provider_id = f"offline-3gram-{dim}"

    def embed(self, text: str) -> np.ndarray:
        counts = np.zeros(self.dim, dtype=np.float64)
        n_grams = 0
        for tok in _TOKEN.findall(text.lower()):
            padded = f"#{tok}#"
            for i in range(len(padded) - 2):
                counts[_bucket(padded[i:i + 3], self.dim)] += 1.0
                n_grams += 1
        if n_grams == 0:
            raise ValueError("no tokens to embed")
        return counts / np.linalg.norm(counts)


class HttpEmbedder:
    """Embedding provider over a plain HTTP/JSON endpoint."""

    def __init__(self, endpoint: str, model: str, dim: int,
                 api_key: Optional[str] = None, timeout_s: float = 30.0):
        import httpx

        self._httpx = httpx
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.provider_id = model

    def embed(self, text: str) -> np.ndarray:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._httpx.post(self.endpoint,
                                    json={"model": self.model, "input": text},
                                    headers=headers, timeout=self.timeout_s)
        except self._httpx.TimeoutException as e:
            raise ProviderTimeout(str(e)) from e
        except self._httpx.HTTPError as e:
            raise ProviderUnavailable(str(e)) from e
        if resp.status_code != 200:
            raise ProviderUnavailable(f"embedding provider returned {resp.status_code}")
        values = np.asarray(resp.json()["vector"], dtype=np.float64)
        if values.shape != (self.dim,):
            raise ProviderUnavailable(
                f"provider returned dim {values.shape}, expected {self.dim}")
        return values


class EmbeddingCache:
    """npz sidecar keyed by (provider_id, text hash); avoids repeat calls."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._entries: dict[str, np.ndarray] = {}
        self._dirty = False
        if self.path.exists():
            with np.load(self.path) as data:
                self._entries = {k: data[k] for k in data.files}

    @staticmethod
    def _key(provider_id: str, text: str) -> str:
        h = hashlib.sha256()
        h.update(provider_id.encode("utf-8"))
        h.update(b"\x00")
        h.update(text.encode("utf-8"))
        return "e_" + h.hexdigest()

    def get(self, provider_id: str, text: str) -> Optional[np.ndarray]:
        return self._entries.get(self._key(provider_id, text))

    def put(self, provider_id: str, text: str, values: np.ndarray) -> None:
        self._entries[self._key(provider_id, text)] = np.asarray(values, dtype=np.float64)
        self._dirty = True

    def save(self) -> None:
        if not self._dirty:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(self.path, **self._entries)
        self._dirty = False

    def __len__(self) -> int:
        return len(self._entries)


def embed_texts(texts: Iterable[tuple[str, str]], embedder: Embedder,
                cache: Optional[EmbeddingCache] = None) -> list[EmbeddingVector]:
    """Embed (ad_id, text) pairs; one vector per input, constant dim.

    Raises EmptyText for inputs with nothing embeddable. Merge order is
    the input order, so parallel providers can be layered behind the
    embedder without affecting results.
    """
    out: list[EmbeddingVector] = []
    for ad_id, text in texts:
        if cache is not None:
            hit = cache.get(embedder.provider_id, text)
            if hit is not None:
                out.append(EmbeddingVector(ad_id, hit, embedder.dim, embedder.provider_id))
                continue
        try:
            values = embedder.embed(text)
        except ValueError:
            raise EmptyText(ad_id) from None
        if cache is not None:
            cache.put(embedder.provider_id, text, values)
        out.append(EmbeddingVector(ad_id, values, embedder.dim, embedder.provider_id))
    return out

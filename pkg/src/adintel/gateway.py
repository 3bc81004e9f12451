"""Provider gateway: prompt templating, structured-output validation,
retries, and a deterministic offline mock.

Templates live as plain-text files with ``## Section`` headers and
``{{placeholder}}`` markers; schemas as flat ``name kind required`` line
files. The mock provider first looks for a canned response keyed on a
stable hash of the rendered prompt, then falls back to a synthesized
response built only from the request's binding values, so offline runs
are bit-reproducible end to end.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol

from .errors import MissingBinding, ProviderTimeout, ProviderUnavailable, UnknownTemplate

KINDS = ("string", "string_list", "number")

_PLACEHOLDER = re.compile(r"\{\{([a-zA-Z0-9_]+)\}\}")


# ---------------------------------------------------------------------------
# templates

@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    sections: tuple[tuple[str, str], ...]  # ordered (name, text)

    @property
    def placeholders(self) -> list[str]:
        seen: list[str] = []
        for _, text in self.sections:
            for m in _PLACEHOLDER.finditer(text):
                if m.group(1) not in seen:
                    seen.append(m.group(1))
        return seen

    def render(self, bindings: dict[str, str]) -> str:
        """Render sections in declared order with `## Name` headers.

        Pure function of (template, bindings); raises MissingBinding for
        any unresolved placeholder.
        """
        for name in self.placeholders:
            if name not in bindings:
                raise MissingBinding(name)

        def sub(text: str) -> str:
            return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), text)

        parts = [f"## {name}\n{sub(text)}" for name, text in self.sections]
        return "\n\n".join(parts) + "\n"


def parse_template(template_id: str, text: str) -> PromptTemplate:
    sections: list[tuple[str, str]] = []
    name: Optional[str] = None
    body: list[str] = []

    def flush():
        if name is not None:
            sections.append((name, "\n".join(body).strip("\n")))

    for line in text.splitlines():
        if line.startswith("## "):
            flush()
            name = line[3:].strip()
            body = []
        elif name is not None:
            body.append(line)
    flush()
    if not sections:
        # headerless file: one anonymous section named after the id
        sections.append((template_id, text.strip("\n")))
    return PromptTemplate(template_id, tuple(sections))


# ---------------------------------------------------------------------------
# schemas

@dataclass(frozen=True)
class SchemaField:
    name: str
    kind: str  # string | string_list | number
    required: bool = True


@dataclass(frozen=True)
class StructuredSchema:
    schema_id: str
    fields: tuple[SchemaField, ...]

    def __post_init__(self):
        names = [f.name for f in self.fields]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate field names in schema {self.schema_id}")
        for f in self.fields:
            if f.kind not in KINDS:
                raise ValueError(f"unknown kind {f.kind!r} in schema {self.schema_id}")


def load_packaged_template(template_id: str) -> PromptTemplate:
    """Load one template from the packaged assets without a Gateway."""
    path = resources.files("adintel") / "templates" / f"{template_id}.txt"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UnknownTemplate(template_id) from None
    return parse_template(template_id, text)


def parse_schema(schema_id: str, text: str) -> StructuredSchema:
    fields = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"bad schema line in {schema_id}: {raw!r}")
        name, kind = parts[0], parts[1]
        required = True
        if len(parts) >= 3:
            required = parts[2] != "optional"
        fields.append(SchemaField(name, kind, required))
    return StructuredSchema(schema_id, tuple(fields))


# ---------------------------------------------------------------------------
# structured-output validation

def extract_object(raw_text: str) -> Optional[dict]:
    """First well-formed JSON object in the text, prose around it tolerated."""
    decoder = json.JSONDecoder()
    for start in range(len(raw_text)):
        if raw_text[start] != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(raw_text, start)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _kind_ok(value, kind: str) -> bool:
    if kind == "string":
        return isinstance(value, str)
    if kind == "string_list":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    return False


def validate_output(raw_text: str, schema: StructuredSchema) -> tuple[Optional[dict], list[str]]:
    """Validate raw provider text against a schema.

    Returns (parsed, errors); never raises. parsed is None whenever the
    error list is non-empty.
    """
    obj = extract_object(raw_text)
    if obj is None:
        return None, ["no object found"]
    errors: list[str] = []
    parsed: dict = {}
    for f in schema.fields:
        if f.name not in obj:
            if f.required:
                errors.append(f"missing: {f.name}")
            continue
        value = obj[f.name]
        if not _kind_ok(value, f.kind):
            errors.append(f"wrong kind: {f.name} (expected {f.kind})")
            continue
        parsed[f.name] = value
    if errors:
        return None, errors
    return parsed, []


def serialize_map(parsed: dict) -> str:
    return json.dumps(parsed, ensure_ascii=False, sort_keys=True)


# ---------------------------------------------------------------------------
# requests / results

@dataclass
class CompletionRequest:
    template_id: str
    bindings: dict[str, str]
    schema_id: str
    image_refs: list[str] = field(default_factory=list)
    image_payloads: list[tuple[str, str]] = field(default_factory=list)  # (ref, base64)


@dataclass
class CompletionResult:
    raw_text: str
    parsed: Optional[dict]
    provider_id: str
    attempt_count: int
    validation_failed: bool = False


def prompt_digest(prompt: str) -> str:
    """Stable key used by the mock provider's canned-response lookup."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# providers

class Provider(Protocol):
    provider_id: str

    def complete(self, prompt: str, request: CompletionRequest, schema: StructuredSchema) -> str:
        ...


_TOKEN = re.compile(r"[a-z0-9]{4,}")

_SYNTH_STOPWORDS = frozenset({
    "with", "your", "that", "this", "from", "have", "into", "every",
    "each", "more", "than", "when", "what", "will", "their", "them",
})


def synth_tokens(bindings: dict[str, str], top_n: int = 4) -> list[str]:
    """Most frequent content tokens across all binding values.

    Sorted by (frequency desc, token asc) so the result is a pure
    function of the binding contents, independent of dict order.
    """
    counts: Counter[str] = Counter()
    for key in sorted(bindings):
        for tok in _TOKEN.findall(str(bindings[key]).lower()):
            if tok not in _SYNTH_STOPWORDS:
                counts[tok] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:top_n]]


def synthesize_response(request: CompletionRequest, schema: StructuredSchema) -> str:
    """Deterministic stand-in response echoing binding values.

    Fills every schema field with non-empty content derived from the
    request, so downstream pipelines run offline without canned files.
    """
    tokens = synth_tokens(request.bindings) or ["unknown"]
    digest = prompt_digest(request.template_id + serialize_map(
        {k: str(v) for k, v in sorted(request.bindings.items())}))
    obj: dict = {}
    for f in schema.fields:
        if f.kind == "string":
            obj[f.name] = " ".join([f.name.replace("_", " ")] + tokens)
        elif f.kind == "string_list":
            obj[f.name] = tokens[:2] or [f.name]
        else:
            obj[f.name] = int(digest[:4], 16) % 100
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


class MockProvider:
    """Offline provider: canned responses by prompt hash, synthesized otherwise."""

    provider_id = "mock"

    def __init__(self, fixtures_dir: Optional[str | Path] = None):
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None

    def complete(self, prompt: str, request: CompletionRequest, schema: StructuredSchema) -> str:
        if self.fixtures_dir is not None:
            canned = self.fixtures_dir / f"{prompt_digest(prompt)}.txt"
            if canned.exists():
                return canned.read_text(encoding="utf-8")
        return synthesize_response(request, schema)


class ScriptedProvider:
    """Test provider that replays a fixed list of raw responses."""

    provider_id = "scripted"

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self.calls = 0

    def complete(self, prompt: str, request: CompletionRequest, schema: StructuredSchema) -> str:
        if not self._responses:
            raise ProviderUnavailable("scripted provider exhausted")
        self.calls += 1
        return self._responses.pop(0)


class _TokenBucket:
    """Serialized token bucket; refills at `rate` tokens per second."""

    def __init__(self, rate: float, capacity: float):
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
            self._last = now
            if self._tokens < 1.0:
                wait = (1.0 - self._tokens) / self.rate
                time.sleep(wait)
                self._tokens = 1.0
                self._last = time.monotonic()
            self._tokens -= 1.0


class HttpProvider:
    """Chat-completion provider over a plain HTTP/JSON endpoint."""

    def __init__(self, endpoint: str, model: str, api_key: Optional[str] = None,
                 timeout_s: float = 30.0, requests_per_s: float = 2.0):
        import httpx  # deferred: offline paths never need it loaded

        self._httpx = httpx
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.provider_id = model
        self._bucket = _TokenBucket(requests_per_s, capacity=requests_per_s)

    def complete(self, prompt: str, request: CompletionRequest, schema: StructuredSchema) -> str:
        self._bucket.acquire()
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "prompt": prompt,
            "images": [{"ref": ref, "data": b64} for ref, b64 in request.image_payloads],
        }
        try:
            resp = self._httpx.post(self.endpoint, json=payload, headers=headers,
                                    timeout=self.timeout_s)
        except self._httpx.TimeoutException as e:
            raise ProviderTimeout(str(e)) from e
        except self._httpx.HTTPError as e:
            raise ProviderUnavailable(str(e)) from e
        if resp.status_code != 200:
            raise ProviderUnavailable(f"provider returned {resp.status_code}")
        body = resp.json()
        return body.get("text", "")


# ---------------------------------------------------------------------------
# gateway

CORRECTIVE_INSTRUCTION = "Return only the structured object."


class Gateway:
    """Shared front door for completion calls.

    Loads templates/schemas from the packaged assets directory, optionally
    overlaid by a user directory (user files win on id collisions).
    """

    def __init__(self, provider: Provider, templates_dir: Optional[str | Path] = None,
                 max_retries: int = 2):
        self.provider = provider
        self.max_retries = max_retries
        self._templates: dict[str, PromptTemplate] = {}
        self._schemas: dict[str, StructuredSchema] = {}
        self._load_packaged()
        if templates_dir is not None:
            self._load_dir(Path(templates_dir))

    def _load_packaged(self) -> None:
        root = resources.files("adintel") / "templates"
        for entry in sorted(root.iterdir(), key=lambda e: e.name):
            self._load_file(entry.name, entry.read_text(encoding="utf-8"))

    def _load_dir(self, path: Path) -> None:
        for p in sorted(path.glob("*")):
            if p.suffix in (".txt", ".schema"):
                self._load_file(p.name, p.read_text(encoding="utf-8"))

    def _load_file(self, name: str, text: str) -> None:
        stem = name.rsplit(".", 1)[0]
        if name.endswith(".schema"):
            self._schemas[stem] = parse_schema(stem, text)
        elif name.endswith(".txt"):
            self._templates[stem] = parse_template(stem, text)

    def template(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(template_id) from None

    def schema(self, schema_id: str) -> StructuredSchema:
        try:
            return self._schemas[schema_id]
        except KeyError:
            raise UnknownTemplate(schema_id) from None

    def render_prompt(self, template_id: str, bindings: dict[str, str]) -> str:
        return self.template(template_id).render(bindings)

    def complete_structured(self, request: CompletionRequest,
                            corrective: bool = False) -> CompletionResult:
        """Call the provider, validating output against the request schema.

        On validation failure the prompt is retried with a corrective
        instruction appended, up to max_retries extra attempts; exhaustion
        yields a result carrying raw_text with parsed absent and the
        validation_failed flag set. Passing corrective=True appends the
        instruction from the first attempt (callers use it for semantic
        re-asks).
        """
        schema = self.schema(request.schema_id)
        base_prompt = self.render_prompt(request.template_id, request.bindings)

        raw_text = ""
        for attempt in range(1, self.max_retries + 2):
            prompt = base_prompt if attempt == 1 and not corrective else (
                base_prompt + "\n" + CORRECTIVE_INSTRUCTION + "\n")
            raw_text = self.provider.complete(prompt, request, schema)
            parsed, errors = validate_output(raw_text, schema)
            if not errors:
                return CompletionResult(raw_text, parsed, self.provider.provider_id, attempt)
        return CompletionResult(raw_text, None, self.provider.provider_id,
                                self.max_retries + 1, validation_failed=True)

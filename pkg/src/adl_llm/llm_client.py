"""Chat-completion and embedding clients: HTTP, scripted mock, record/replay.

All clients expose ``complete(bundle) -> LLMResponse`` and
``embed(text) -> Embedding``. The HTTP client speaks the common
chat-completions JSON schema, which hosted and self-hosted servers share.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import httpx
import numpy as np

from .errors import CacheMissError, ConfigurationError, TransportError
from .prompting import PromptBundle

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})
API_KEY_ENV = "OPENAI_API_KEY"
LOCAL_EMBED_DIM = 256
LOCAL_EMBED_TAG = f"local-trigram-{LOCAL_EMBED_DIM}"


@dataclass(frozen=True)
class LLMConfig:
    endpoint_url: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo-0125"
    embedding_model: str = "text-embedding-3-small"
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 3
    parallelism: int = 1
    backoff_base: float = 1.0
    backoff_cap: float = 30.0

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be >= 1")
        if self.max_retries < 0:
            raise ConfigurationError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be > 0")


@dataclass(frozen=True)
class LLMResponse:
    content: str
    latency: float
    from_cache: bool = False

    def __post_init__(self) -> None:
        if not (self.latency >= 0 and math.isfinite(self.latency)):
            raise ValueError(f"invalid latency {self.latency!r}")


@dataclass(frozen=True)
class Embedding:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must have dim > 0")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class Embedder(Protocol):
    tag: str

    def embed(self, text: str) -> Embedding: ...


def request_key(kind: str, model: str, temperature: float | None, *parts: str) -> str:
    payload = json.dumps([kind, model, temperature, *parts], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def prompt_hash(user_prompt: str) -> str:
    """Key used by scripted mocks: SHA-256 of the user prompt."""
    return hashlib.sha256(user_prompt.encode("utf-8")).hexdigest()


def _check_text(text: str) -> None:
    if not text or not text.strip():
        raise ValueError("cannot embed empty text")


class LocalEmbedder:
    """Hashed bag of character trigrams, L2-normalized.

    Uses BLAKE2b for bucket assignment so vectors are identical on every
    platform and Python build.
    """

    def __init__(self, dim: int = LOCAL_EMBED_DIM) -> None:
        self.dim = dim
        self.tag = f"local-trigram-{dim}"

    def embed(self, text: str) -> Embedding:
        _check_text(text)
        padded = f" {' '.join(text.lower().split())} "
        counts = [0.0] * self.dim
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(padded[i:i + 3].encode("utf-8"), digest_size=8).digest()
            counts[int.from_bytes(digest, "big") % self.dim] += 1.0
        norm = math.sqrt(math.fsum(c * c for c in counts))
        return Embedding(tuple(c / norm for c in counts))


def _retry_after(response: httpx.Response | None) -> float | None:
    if response is None:
        return None
    raw = response.headers.get("retry-after")
    try:
        value = float(raw) if raw is not None else None
    except ValueError:
        return None
    return value if value is not None and math.isfinite(value) and value >= 0 else None


class HttpLLMClient:
    """Client for an OpenAI-compatible endpoint.

    Transient failures (network errors, timeouts, 429 and 5xx) are retried up
    to ``cfg.max_retries`` times with capped exponential backoff and jitter;
    a ``Retry-After`` header takes precedence when present.
    """

    def __init__(
        self,
        cfg: LLMConfig,
        *,
        http: httpx.Client | None = None,
        api_key: str | None = None,
        sleep: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ) -> None:
        self.cfg = cfg
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._http = http or httpx.Client(timeout=cfg.timeout)
        self._headers = headers
        self._sleep = sleep
        self._rng = rng or random.Random()
        self.tag = cfg.embedding_model

    def _delay(self, attempt: int, response: httpx.Response | None) -> float:
        hinted = _retry_after(response)
        if hinted is not None:
            return min(hinted, self.cfg.backoff_cap)
        base = min(self.cfg.backoff_base * 2 ** attempt, self.cfg.backoff_cap)
        return base / 2 + self._rng.uniform(0, base / 2)

    def _post(self, path: str, payload: dict) -> dict:
        url = self.cfg.endpoint_url.rstrip("/") + path
        last = ""
        for attempt in range(self.cfg.max_retries + 1):
            response = None
            try:
                response = self._http.post(url, json=payload, headers=self._headers,
                                           timeout=self.cfg.timeout)
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if response.status_code == 200:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise TransportError(f"{url}: response is not JSON") from exc
                last = f"HTTP {response.status_code}: {response.text[:200]}"
                if response.status_code not in RETRYABLE_STATUS:
                    raise TransportError(f"{url}: {last}")
            if attempt == self.cfg.max_retries:
                break
            delay = self._delay(attempt, response)
            log.warning("%s failed (%s); retry %d in %.2fs", url, last, attempt + 1, delay)
            self._sleep(delay)
        raise TransportError(f"{url}: giving up after {self.cfg.max_retries} retries ({last})")

    def complete(self, bundle: PromptBundle) -> LLMResponse:
        payload = {
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user},
            ],
        }
        started = time.perf_counter()
        body = self._post("/chat/completions", payload)
        latency = time.perf_counter() - started
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError("malformed chat-completion response") from exc
        return LLMResponse(content=content or "", latency=latency)

    def embed(self, text: str) -> Embedding:
        _check_text(text)
        body = self._post("/embeddings", {"model": self.cfg.embedding_model, "input": text})
        try:
            vector = body["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError("malformed embedding response") from exc
        return Embedding(tuple(float(v) for v in vector))


class MockLLMClient:
    """Scripted client keyed on the SHA-256 of the user prompt.

    ``default`` answers prompts missing from ``responses``: a fixed string or
    a callable ``PromptBundle -> str``. Without it, a miss is an error.
    """

    def __init__(
        self,
        responses: Mapping[str, str] | None = None,
        *,
        default: str | Callable[[PromptBundle], str] | None = None,
        embedder: Embedder | None = None,
    ) -> None:
        self.responses = dict(responses or {})
        self.default = default
        self.embedder = embedder or LocalEmbedder()
        self.tag = self.embedder.tag
        self.calls = 0

    def complete(self, bundle: PromptBundle) -> LLMResponse:
        self.calls += 1
        content = self.responses.get(prompt_hash(bundle.user))
        if content is None:
            if self.default is None:
                raise CacheMissError("mock has no scripted response for this prompt")
            content = self.default(bundle) if callable(self.default) else self.default
        return LLMResponse(content=content, latency=0.0, from_cache=True)

    def embed(self, text: str) -> Embedding:
        return self.embedder.embed(text)

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> MockLLMClient:
        return cls(json.loads(Path(path).read_text(encoding="utf-8")), **kwargs)


class ReplayCache:
    """Append-only JSONL store of responses, one object per line:
    ``{key, kind, content | vector, latency, recorded_at}``.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        entry = json.loads(line)
                        self._entries.setdefault(entry["key"], entry)

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> dict | None:
        return self._entries.get(key)

    def put(self, key: str, kind: str, *, content: str | None = None,
            vector: Sequence[float] | None = None, latency: float = 0.0) -> None:
        entry: dict = {"key": key, "kind": kind}
        if content is not None:
            entry["content"] = content
        if vector is not None:
            entry["vector"] = list(vector)
        entry["latency"] = latency
        entry["recorded_at"] = datetime.now(timezone.utc).isoformat()
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = entry
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


class CachingClient:
    """Serve requests from a :class:`ReplayCache`.

    ``record=False`` is strict replay: a miss raises :class:`CacheMissError`.
    ``record=True`` forwards misses to ``inner`` and appends the result.
    """

    def __init__(self, inner, cache: ReplayCache, cfg: LLMConfig, *, record: bool = False) -> None:
        self.inner = inner
        self.cache = cache
        self.cfg = cfg
        self.record = record
        # keyed on the configured model so strict replay (no inner) finds
        # what a recording run stored
        self.tag = cfg.embedding_model

    def _miss(self, what: str) -> None:
        if not self.record or self.inner is None:
            raise CacheMissError(f"replay cache {self.cache.path} has no entry for {what}")

    def complete(self, bundle: PromptBundle) -> LLMResponse:
        key = request_key("chat", self.cfg.model, self.cfg.temperature, bundle.system, bundle.user)
        hit = self.cache.get(key)
        if hit is not None:
            return LLMResponse(hit["content"], float(hit.get("latency", 0.0)), from_cache=True)
        self._miss("a chat request")
        response = self.inner.complete(bundle)
        self.cache.put(key, "chat", content=response.content, latency=response.latency)
        return response

    def embed(self, text: str) -> Embedding:
        _check_text(text)
        key = request_key("embedding", self.tag, None, text)
        hit = self.cache.get(key)
        if hit is not None:
            return Embedding(tuple(float(v) for v in hit["vector"]))
        self._miss("an embedding request")
        emb = self.inner.embed(text)
        self.cache.put(key, "embedding", vector=emb.values)
        return emb


class MemoEmbedder:
    """Per-process memo around an embedder; window texts repeat a lot."""

    def __init__(self, inner: Embedder) -> None:
        self.inner = inner
        self.tag = inner.tag
        self._memo: dict[str, Embedding] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> Embedding:
        with self._lock:
            hit = self._memo.get(text)
        if hit is None:
            hit = self.inner.embed(text)
            with self._lock:
                self._memo[text] = hit
        return hit


def complete_many(client, bundles: Iterable[PromptBundle], parallelism: int = 1) -> list[LLMResponse]:
    """Run ``client.complete`` over ``bundles``; results come back in input order."""
    bundles = list(bundles)
    if parallelism <= 1:
        return [client.complete(b) for b in bundles]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(client.complete, bundles))


def make_client(cfg: LLMConfig, *, mock: str | bool | None = None, replay: str | Path | None = None,
                record: bool = False, mock_default: Callable[[PromptBundle], str] | None = None):
    """Assemble the client stack the CLI flags describe."""
    if mock:
        inner = (MockLLMClient.from_file(mock, default=mock_default) if isinstance(mock, (str, Path))
                 else MockLLMClient(default=mock_default))
    elif replay and not record:
        inner = None
    else:
        inner = HttpLLMClient(cfg)
    if replay:
        return CachingClient(inner, ReplayCache(replay), cfg, record=record)
    return inner

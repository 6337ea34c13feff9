"""Language-model boundary: completion backends, embedders, and call logging.

Two completion backends ship with the package. ScriptedBackend answers from
an ordered pattern -> response table and is fully deterministic, which is
what every test and replay run uses. RemoteBackend speaks a minimal
chat-completion-shaped HTTP API for real models; auth tokens come from the
environment and are never written into snapshots or logs.

Every completion made during a run is recorded in a CallLog with the tick,
the acting agent, and a prompt hash, so evaluation reports can account for
backend cost and prove that scoring itself made zero model calls.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass, field

import httpx

from .errors import (
    BackendTimeoutError,
    DuplicateIdError,
    EmptyTextError,
    EndpointError,
    ExhaustedRetriesError,
    UnknownBackendError,
)

DEFAULT_EMBEDDING_DIM = 64

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TOKEN_RE = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0
    tag: str = ""

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class ScriptedBackend:
    """Deterministic rule-table stand-in for a language model.

    Rules are (pattern, response) pairs evaluated in order against the
    prompt; the first pattern found as a case-insensitive substring wins,
    else `default_response` is returned. Responses are a pure function of
    the prompt text.
    """

    def __init__(self, rules=None, default_response: str = ""):
        self.rules: list[tuple[str, str]] = [tuple(r) for r in (rules or [])]
        self.default_response = default_response
        self.calls: list[str] = []  # prompts seen, for test assertions

    def complete(self, request: CompletionRequest) -> str:
        self.calls.append(request.prompt)
        prompt = request.prompt.lower()
        for pattern, response in self.rules:
            if pattern.lower() in prompt:
                return response
        return self.default_response


class RemoteBackend:
    """HTTP client for a chat-completion-style endpoint.

    Sends {model, messages:[{role:"user", content}], temperature, max_tokens}
    and reads the reply text from the usual places in the response body.
    Timeouts and 5xx/429 answers are retried with exponential backoff; once
    the retry budget is spent an ExhaustedRetriesError chains the last
    failure. With retries=0 the underlying error surfaces directly.
    """

    RETRY_STATUSES = (429, 500, 502, 503, 504)

    def __init__(
        self,
        endpoint: str,
        model: str,
        token_env: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff_base: float = 0.5,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"content-type": "application/json"}
        if self.token_env:
            token = os.environ.get(self.token_env)
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    @staticmethod
    def _extract_text(body: dict) -> str:
        choices = body.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            message = first.get("message")
            if isinstance(message, dict) and isinstance(message.get("content"), str):
                return message["content"]
            if isinstance(first.get("text"), str):
                return first["text"]
        if isinstance(body.get("text"), str):
            return body["text"]
        raise EndpointError(200, f"no text field in response: {str(body)[:200]}")

    def _attempt(self, request: CompletionRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            response = self._client.post(self.endpoint, json=payload, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(f"request to {self.endpoint} timed out") from exc
        if response.status_code >= 400:
            raise EndpointError(response.status_code, response.text)
        return self._extract_text(response.json())

    def complete(self, request: CompletionRequest) -> str:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                return self._attempt(request)
            except (BackendTimeoutError, EndpointError) as exc:
                retryable = isinstance(exc, BackendTimeoutError) or (
                    isinstance(exc, EndpointError) and exc.status in self.RETRY_STATUSES
                )
                if not retryable:
                    raise
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_base * (2**attempt))
        if self.retries == 0:
            raise last  # type: ignore[misc]
        raise ExhaustedRetriesError(
            f"{self.retries + 1} attempts failed, last: {last}"
        ) from last


def complete(backend, request: CompletionRequest) -> str:
    """Run one completion against any backend object."""
    return backend.complete(request)


# --- embeddings -----------------------------------------------------------------


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class HashingEmbedder:
    """Deterministic bag-of-tokens embedder.

    Lowercases, splits on non-alphanumerics, increments the component at
    fnv1a64(token) mod dim per token, then L2-normalizes. Equal texts give
    bitwise-equal vectors on every platform; an input with no tokens maps
    to the zero vector.
    """

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def embed(self, text: str) -> tuple[float, ...]:
        if not text:
            raise EmptyTextError("cannot embed empty text")
        counts = [0.0] * self.dim
        for token in _TOKEN_RE.findall(text.lower()):
            counts[_fnv1a64(token.encode("utf-8")) % self.dim] += 1.0
        norm = sum(c * c for c in counts) ** 0.5
        if norm == 0.0:
            return tuple(counts)
        return tuple(c / norm for c in counts)


def embed(embedder, text: str) -> tuple[float, ...]:
    return embedder.embed(text)


# --- registry and call accounting --------------------------------------------------


class BackendRegistry:
    """Backends addressable by the string ids agent profiles reference."""

    def __init__(self):
        self._backends: dict[str, object] = {}

    def register(self, backend_id: str, backend) -> "BackendRegistry":
        if backend_id in self._backends:
            raise DuplicateIdError(f"backend id {backend_id!r} already registered")
        self._backends[backend_id] = backend
        return self

    def resolve(self, backend_id: str):
        try:
            return self._backends[backend_id]
        except KeyError:
            raise UnknownBackendError(f"no backend registered as {backend_id!r}") from None

    def __contains__(self, backend_id: str) -> bool:
        return backend_id in self._backends

    def ids(self) -> list[str]:
        return list(self._backends)


def register_backend(registry: BackendRegistry, backend_id: str, backend) -> BackendRegistry:
    return registry.register(backend_id, backend)


@dataclass(frozen=True)
class CallRecord:
    tick: int
    agent_id: int | str
    call_index: int
    tag: str
    prompt_hash: str


@dataclass
class CallLog:
    """Append-only record of every completion made during a run."""

    records: list[CallRecord] = field(default_factory=list)

    def record(self, tick: int, agent_id, call_index: int, tag: str, prompt: str) -> CallRecord:
        rec = CallRecord(
            tick=tick,
            agent_id=agent_id,
            call_index=call_index,
            tag=tag,
            prompt_hash=hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16],
        )
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)


class Caller:
    """A backend bound to (tick, agent) context so calls land in the log."""

    def __init__(self, backend, log: CallLog, tick: int, agent_id):
        self._backend = backend
        self._log = log
        self.tick = tick
        self.agent_id = agent_id
        self._index = 0

    def ask(self, prompt: str, tag: str = "", max_tokens: int = 512, temperature: float = 0.0) -> str:
        request = CompletionRequest(
            prompt=prompt, max_tokens=max_tokens, temperature=temperature, tag=tag
        )
        self._log.record(self.tick, self.agent_id, self._index, tag, prompt)
        self._index += 1
        return self._backend.complete(request)

"""Model provider boundary: JSON-over-HTTP clients with a bounded retry policy,
plus a deterministic fixtures-backed mock implementing the same contract.

Wire contract (all POST, JSON bodies):
  vision     {"image": <base64 PNG/JPEG>, "prompt": str}              -> {"text": str}
  text       {"prompt": str}                                          -> {"text": str}
  embedding  {"texts": [str], "granularity": "sentence"|"token"}      -> {"vectors": [[f]]} |
                                                                         {"token_vectors": [[[tok, [f]]]]}
  nli        {"premise": str, "hypothesis": str}                      -> {"contradiction": f, "neutral": f, "entailment": f}
"""
from __future__ import annotations

import base64
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

__all__ = [
    "ProviderError",
    "ProviderSet",
    "RetryPolicy",
    "HttpProviderSet",
    "MockProviderSet",
    "request_digest",
    "write_fixture",
]


class ProviderError(RuntimeError):
    """Provider unreachable, timed out past retries, or returned a bad payload."""


@dataclass(frozen=True)
class RetryPolicy:
    retries: int = 2
    backoff_start_s: float = 1.0
    deadline_s: float = 60.0


class ProviderSet(Protocol):
    def vision(self, image: bytes, prompt: str) -> str: ...

    def text(self, prompt: str) -> str: ...

    def embed(self, texts: list[str]) -> list[list[float]]: ...

    def embed_tokens(self, texts: list[str]) -> list[list[tuple[str, list[float]]]]: ...

    def nli(self, premise: str, hypothesis: str) -> dict[str, float]: ...


def _validate_nli(probs: dict[str, Any]) -> dict[str, float]:
    try:
        out = {k: float(probs[k]) for k in ("contradiction", "neutral", "entailment")}
    except (KeyError, TypeError, ValueError) as exc:
        raise ProviderError(f"malformed NLI payload: {probs!r}") from exc
    if abs(sum(out.values()) - 1.0) > 1e-6:
        raise ProviderError(f"NLI probabilities do not sum to 1: {out!r}")
    return out


def _canonical(request: dict[str, Any]) -> bytes:
    return json.dumps(request, sort_keys=True, separators=(",", ":")).encode("utf-8")


def request_digest(kind: str, request: dict[str, Any]) -> str:
    """Stable key for a provider request: sha256 over kind + canonical JSON."""
    h = hashlib.sha256()
    h.update(kind.encode("utf-8"))
    h.update(b"\x00")
    h.update(_canonical(request))
    return h.hexdigest()


@dataclass
class HttpProviderSet:
    """Live providers over HTTP with retries and exponential backoff."""

    vision_url: str
    text_url: str
    embedding_url: str
    nli_url: str
    token: str = ""
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    retry_counts: dict[str, int] = field(default_factory=dict)

    def _post(self, kind: str, url: str, payload: dict[str, Any]) -> dict[str, Any]:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        deadline = time.monotonic() + self.retry.deadline_s
        backoff = self.retry.backoff_start_s
        last_exc: Exception | None = None
        for attempt in range(self.retry.retries + 1):
            if time.monotonic() > deadline:
                break
            try:
                resp = httpx.post(url, json=payload, headers=headers,
                                  timeout=max(0.1, deadline - time.monotonic()))
                resp.raise_for_status()
                if attempt:
                    self.retry_counts[kind] = self.retry_counts.get(kind, 0) + attempt
                return resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                last_exc = exc
                time.sleep(min(backoff, max(0.0, deadline - time.monotonic())))
                backoff *= 2
        raise ProviderError(f"{kind} provider failed after retries: {last_exc}")

    def vision(self, image: bytes, prompt: str) -> str:
        payload = {"image": base64.b64encode(image).decode("ascii"), "prompt": prompt}
        return str(self._post("vision", self.vision_url, payload)["text"])

    def text(self, prompt: str) -> str:
        return str(self._post("text", self.text_url, {"prompt": prompt})["text"])

    def embed(self, texts: list[str]) -> list[list[float]]:
        body = self._post("embedding", self.embedding_url, {"texts": texts, "granularity": "sentence"})
        return [[float(v) for v in vec] for vec in body["vectors"]]

    def embed_tokens(self, texts: list[str]) -> list[list[tuple[str, list[float]]]]:
        body = self._post("embedding", self.embedding_url, {"texts": texts, "granularity": "token"})
        return [[(str(t), [float(v) for v in vec]) for t, vec in doc] for doc in body["token_vectors"]]

    def nli(self, premise: str, hypothesis: str) -> dict[str, float]:
        return _validate_nli(self._post("nli", self.nli_url, {"premise": premise, "hypothesis": hypothesis}))


@dataclass
class MockProviderSet:
    """Deterministic canned providers.

    Responses come either from an in-memory mapping of request digests, or from a
    fixtures directory holding one ``<digest>.json`` file per canned response.
    ``fail_first`` can inject transient failures per kind for retry testing.
    """

    fixtures_dir: Path | None = None
    responses: dict[str, Any] = field(default_factory=dict)
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    fail_first: dict[str, int] = field(default_factory=dict)
    retry_counts: dict[str, int] = field(default_factory=dict)
    calls: list[str] = field(default_factory=list)

    def add(self, kind: str, request: dict[str, Any], response: Any) -> str:
        digest = request_digest(kind, request)
        self.responses[digest] = response
        return digest

    def _lookup(self, kind: str, request: dict[str, Any]) -> Any:
        digest = request_digest(kind, request)
        self.calls.append(f"{kind}:{digest[:12]}")
        attempts = 0
        while self.fail_first.get(kind, 0) > 0:
            self.fail_first[kind] -= 1
            attempts += 1
            if attempts > self.retry.retries:
                raise ProviderError(f"{kind} provider failed after retries (injected)")
        if attempts:
            self.retry_counts[kind] = self.retry_counts.get(kind, 0) + attempts
        if digest in self.responses:
            return self.responses[digest]
        if self.fixtures_dir is not None:
            path = Path(self.fixtures_dir) / f"{digest}.json"
            if path.exists():
                return json.loads(path.read_text(encoding="utf-8"))
        raise ProviderError(f"no canned {kind} response for digest {digest}")

    def vision(self, image: bytes, prompt: str) -> str:
        request = {"image": base64.b64encode(image).decode("ascii"), "prompt": prompt}
        return str(self._lookup("vision", request)["text"])

    def text(self, prompt: str) -> str:
        return str(self._lookup("text", {"prompt": prompt})["text"])

    def embed(self, texts: list[str]) -> list[list[float]]:
        body = self._lookup("embedding", {"texts": texts, "granularity": "sentence"})
        return [[float(v) for v in vec] for vec in body["vectors"]]

    def embed_tokens(self, texts: list[str]) -> list[list[tuple[str, list[float]]]]:
        body = self._lookup("embedding", {"texts": texts, "granularity": "token"})
        return [[(str(t), [float(v) for v in vec]) for t, vec in doc] for doc in body["token_vectors"]]

    def nli(self, premise: str, hypothesis: str) -> dict[str, float]:
        return _validate_nli(self._lookup("nli", {"premise": premise, "hypothesis": hypothesis}))


def write_fixture(fixtures_dir: Path, kind: str, request: dict[str, Any], response: Any) -> Path:
    """Persist one canned response under its request digest."""
    fixtures_dir = Path(fixtures_dir)
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    path = fixtures_dir / f"{request_digest(kind, request)}.json"
    path.write_text(json.dumps(response, indent=2, sort_keys=True), encoding="utf-8")
    return path

"""Uniform chat-completion access.

Three backend kinds share one interface: `http` talks to an OpenAI-style
chat-completions route with retry/backoff, `replay` serves recorded
exchanges for deterministic network-free reruns, and `scripted` runs a
named deterministic policy (used by tests and offline evaluation).

Requests are keyed by component tag, a hash of the canonicalized message
contents, and an occurrence index, so identical prompts issued at
different pipeline steps record and replay correctly.
"""

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

DEFAULT_KEY_ENV = "L3GO_API_KEY"
RETRYABLE_STATUSES = {429, 500, 502, 503, 504}


class GatewayError(Exception):
    pass


class BackendError(GatewayError):
    def __init__(self, reason: str, status: int | None = None):
        super().__init__(reason if status is None else f"HTTP {status}: {reason}")
        self.reason = reason
        self.status = status


class ReplayMissError(GatewayError):
    def __init__(self, tag: str, request_hash: str, occurrence: int):
        super().__init__(
            f"no recorded response for tag={tag!r} hash={request_hash[:16]} "
            f"occurrence={occurrence}")
        self.tag = tag
        self.request_hash = request_hash
        self.occurrence = occurrence


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str | tuple  # plain text, or structured multimodal content parts


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    tag: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def chat_request(user: str, system: str | None = None, *, temperature: float = 0.0,
                 tag: str = "", max_tokens: int = 1024) -> ChatRequest:
    messages = []
    if system is not None:
        messages.append(ChatMessage("system", system))
    messages.append(ChatMessage("user", user))
    return ChatRequest(tuple(messages), temperature=temperature,
                       max_tokens=max_tokens, tag=tag)


def _content_key(content) -> str:
    if isinstance(content, str):
        return content
    # Structured (multimodal) content: canonical JSON of the parts.
    return json.dumps(content, sort_keys=True, ensure_ascii=True, default=list)


def canonical_form(req: ChatRequest) -> str:
    """Order-free canonical form: sorted message contents only.

    Roles, sampling settings, and the tag are excluded so that only a change
    to what is actually said can change the hash.
    """
    keys = sorted(_content_key(m.content) for m in req.messages)
    return json.dumps(keys, ensure_ascii=True)


def request_hash(req: ChatRequest) -> str:
    return hashlib.sha256(canonical_form(req).encode("utf-8")).hexdigest()


class ExchangeLog:
    """Append-only JSONL log of every completion attempt."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=True, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class Backend:
    """Shared occurrence bookkeeping and logging for all backend kinds."""

    def __init__(self, log: ExchangeLog | None = None):
        self.log = log
        self._counts: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def _next_occurrence(self, tag: str, req_hash: str) -> int:
        with self._lock:
            key = (tag, req_hash)
            occ = self._counts.get(key, 0)
            self._counts[key] = occ + 1
            return occ

    def _log(self, **record) -> None:
        if self.log is not None:
            self.log.append(record)

    def complete(self, req: ChatRequest) -> str:
        req_hash = request_hash(req)
        occ = self._next_occurrence(req.tag, req_hash)
        try:
            text = self._complete(req, req_hash, occ)
        except GatewayError as exc:
            self._log(tag=req.tag, hash=req_hash, occurrence=occ,
                      outcome="error", detail=str(exc))
            raise
        self._log(tag=req.tag, hash=req_hash, occurrence=occ, outcome="ok",
                  response_chars=len(text))
        return text

    def complete_n(self, req: ChatRequest, n: int) -> list[str | None]:
        """n independent completions in request order; failed slots are None."""
        if n < 1:
            raise ValueError("n must be >= 1")
        out: list[str | None] = []
        for _ in range(n):
            try:
                out.append(self.complete(req))
            except BackendError:
                out.append(None)
            except ReplayMissError:
                out.append(None)
        return out

    def _complete(self, req: ChatRequest, req_hash: str, occurrence: int) -> str:
        raise NotImplementedError


class ScriptedBackend(Backend):
    """Deterministic policy backend: response = f(request, occurrence)."""

    def __init__(self, policy: Callable[[ChatRequest, int], str],
                 log: ExchangeLog | None = None):
        super().__init__(log)
        self.policy = policy

    def _complete(self, req, req_hash, occurrence):
        return self.policy(req, occurrence)


class ResponseSequence:
    """Scripted policy that replays a fixed (tag, response) sequence in order."""

    def __init__(self, steps: Sequence[tuple[str, str]]):
        self.steps = list(steps)
        self.cursor = 0

    def __call__(self, req: ChatRequest, occurrence: int) -> str:
        if self.cursor >= len(self.steps):
            raise BackendError(f"scripted sequence exhausted at call {self.cursor} "
                               f"(tag {req.tag!r})")
        tag, response = self.steps[self.cursor]
        if tag != req.tag:
            raise BackendError(
                f"scripted sequence expected tag {tag!r} at call {self.cursor}, "
                f"got {req.tag!r}")
        self.cursor += 1
        return response


def _store_filename(tag: str, req_hash: str, occurrence: int) -> str:
    safe_tag = re.sub(r"[^A-Za-z0-9_.-]+", "-", tag) or "untagged"
    return f"{safe_tag}__{req_hash[:16]}__{occurrence}.json"


class ReplayBackend(Backend):
    """Serves responses recorded by RecordingBackend; errors on any miss."""

    def __init__(self, store_dir: str | Path, log: ExchangeLog | None = None):
        super().__init__(log)
        self.store_dir = Path(store_dir)
        self._store: dict[tuple[str, str, int], str] = {}
        if not self.store_dir.is_dir():
            raise BackendError(f"replay store {self.store_dir} is not a directory")
        for path in sorted(self.store_dir.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            key = (doc["tag"], doc["request_sha256"], doc["occurrence"])
            self._store[key] = doc["response"]

    def _complete(self, req, req_hash, occurrence):
        try:
            return self._store[(req.tag, req_hash, occurrence)]
        except KeyError:
            raise ReplayMissError(req.tag, req_hash, occurrence) from None


class RecordingBackend(Backend):
    """Forwards to a live backend and persists every exchange for replay."""

    def __init__(self, inner: Backend, store_dir: str | Path,
                 log: ExchangeLog | None = None):
        super().__init__(log)
        self.inner = inner
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)

    def _complete(self, req, req_hash, occurrence):
        text = self.inner._complete(req, req_hash, occurrence)
        doc = {
            "tag": req.tag,
            "request_sha256": req_hash,
            "occurrence": occurrence,
            "messages": [{"role": m.role, "content": m.content} for m in req.messages],
            "response": text,
        }
        path = self.store_dir / _store_filename(req.tag, req_hash, occurrence)
        path.write_text(json.dumps(doc, ensure_ascii=True, indent=1), encoding="utf-8")
        return text


def record_session(live: Backend, store_dir: str | Path) -> RecordingBackend:
    """Wrap a live backend so the session can later be replayed byte-for-byte."""
    return RecordingBackend(live, store_dir)


class HttpBackend(Backend):
    """OpenAI-compatible chat-completions client with exponential backoff."""

    def __init__(self, base_url: str, model: str, key_env: str = DEFAULT_KEY_ENV,
                 timeout: float = 60.0, max_tries: int = 3,
                 backoff_base: float = 1.0, backoff_factor: float = 2.0,
                 session=None, sleeper: Callable[[float], None] = time.sleep,
                 log: ExchangeLog | None = None):
        super().__init__(log)
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.key_env = key_env
        self.timeout = timeout
        self.max_tries = max_tries
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.sleeper = sleeper
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def _payload(self, req: ChatRequest) -> dict:
        def content_out(content):
            return content if isinstance(content, str) else list(content)

        return {
            "model": self.model,
            "messages": [{"role": m.role, "content": content_out(m.content)}
                         for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }

    def _complete(self, req, req_hash, occurrence):
        import requests

        key = os.environ.get(self.key_env, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = f"{self.base_url}/chat/completions"
        last_error = "no attempt made"
        for attempt in range(1, self.max_tries + 1):
            try:
                resp = self.session.post(url, json=self._payload(req),
                                         headers=headers, timeout=self.timeout)
                status = resp.status_code
            except requests.RequestException as exc:
                status = None
                last_error = f"request failed: {exc}"
            else:
                if status == 200:
                    try:
                        body = resp.json()
                        text = body["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise BackendError(f"malformed response body: {exc}") from exc
                    self._log(tag=req.tag, hash=req_hash, occurrence=occurrence,
                              outcome="attempt_ok", attempt=attempt)
                    return text
                last_error = resp.text[:200]
                if status not in RETRYABLE_STATUSES:
                    raise BackendError(last_error, status=status)
            self._log(tag=req.tag, hash=req_hash, occurrence=occurrence,
                      outcome="attempt_failed", attempt=attempt,
                      status=status, detail=last_error)
            if attempt < self.max_tries:
                self.sleeper(self.backoff_base * self.backoff_factor ** (attempt - 1))
        raise BackendError(f"gave up after {self.max_tries} tries: {last_error}",
                           status=None)


# ---------------------------------------------------------------------------
# Backend specs: how the CLI names a backend.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackendSpec:
    kind: str  # http | replay | scripted
    http_base_url: str = ""
    http_model: str = ""
    http_key_env: str = DEFAULT_KEY_ENV
    http_timeout: float = 60.0
    http_max_tries: int = 3
    replay_dir: str = ""
    scripted_policy: str = ""

    def __post_init__(self):
        if self.kind not in ("http", "replay", "scripted"):
            raise ValueError(f"unknown backend kind {self.kind!r}")


def parse_backend_spec(text: str, *, model: str = "gpt-4",
                       key_env: str = DEFAULT_KEY_ENV) -> BackendSpec:
    """Parse `replay:DIR`, `scripted:NAME`, or `http:URL` strings."""
    kind, sep, rest = text.partition(":")
    if not sep or not rest:
        raise ValueError(f"backend spec must look like kind:target, got {text!r}")
    if kind == "replay":
        return BackendSpec(kind="replay", replay_dir=rest)
    if kind == "scripted":
        return BackendSpec(kind="scripted", scripted_policy=rest)
    if kind == "http":
        return BackendSpec(kind="http", http_base_url=rest, http_model=model,
                           http_key_env=key_env)
    raise ValueError(f"unknown backend kind {kind!r}")


def make_backend(spec: BackendSpec, log: ExchangeLog | None = None) -> Backend:
    if spec.kind == "replay":
        return ReplayBackend(spec.replay_dir, log=log)
    if spec.kind == "scripted":
        from .policies import get_policy

        return ScriptedBackend(get_policy(spec.scripted_policy), log=log)
    return HttpBackend(spec.http_base_url, spec.http_model, key_env=spec.http_key_env,
                       timeout=spec.http_timeout, max_tries=spec.http_max_tries, log=log)

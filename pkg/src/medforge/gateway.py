"""Uniform access to language-model backends plus the tag-output grammar.

Two backend kinds exist: a deterministic scripted mock (replies keyed by
call ordinal, for bit-reproducible pipelines) and a generic HTTP chat
backend with retries. The gateway is shareable across worker threads,
caps in-flight requests per backend, and logs every prompt/response pair
for golden-file and audit assertions.
"""

from __future__ import annotations

import json
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .templates import BUILTIN_TEMPLATE_BODIES, DEFAULT_STEP_REQUIREMENTS


class GatewayError(Exception):
    """Base for every backend/templating failure."""


class TemplateError(GatewayError):
    def __init__(self, message: str, slot: str):
        self.slot = slot
        super().__init__(f"{message}: {slot}")


class TagParseError(GatewayError):
    def __init__(self, message: str, tag: str):
        self.tag = tag
        super().__init__(f"{message}: <{tag}>")


class InvalidRatingError(GatewayError):
    pass


class ScriptExhaustedError(GatewayError):
    pass


class RateLimitedError(GatewayError):
    """Retry budget spent while the endpoint kept answering 429."""


class BackendHTTPError(GatewayError):
    pass


_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body with ``{slot}`` placeholders."""

    name: str
    body: str
    required_slots: frozenset[str]

    def __post_init__(self) -> None:
        found = set(_SLOT_RE.findall(self.body))
        if found != set(self.required_slots):
            missing = sorted(set(self.required_slots) - found)
            extra = sorted(found - set(self.required_slots))
            raise TemplateError("slots in body and required_slots differ", slot=",".join(missing + extra))

    @classmethod
    def from_body(cls, name: str, body: str) -> "PromptTemplate":
        return cls(name=name, body=body, required_slots=frozenset(_SLOT_RE.findall(body)))


def render_template(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every slot in a single pass.

    Bindings must cover required_slots exactly; bound values may contain
    braces without being re-substituted.
    """
    provided = set(bindings)
    missing = template.required_slots - provided
    if missing:
        raise TemplateError("missing binding", slot=sorted(missing)[0])
    extra = provided - template.required_slots
    if extra:
        raise TemplateError("unused binding", slot=sorted(extra)[0])
    return _SLOT_RE.sub(lambda m: bindings[m.group(1)], template.body)


def parse_tagged(text: str, tag: str) -> str:
    """Inner text of the first <tag>...</tag> block, whitespace-trimmed.

    Matching is case-sensitive and non-nested.
    """
    open_tok, close_tok = f"<{tag}>", f"</{tag}>"
    start = text.find(open_tok)
    if start < 0:
        raise TagParseError("tag not found", tag=tag)
    end = text.find(close_tok, start + len(open_tok))
    if end < 0:
        raise TagParseError("tag not closed", tag=tag)
    return text[start + len(open_tok):end].strip()


def parse_rating(text: str) -> int:
    """The sole 0/1 integer inside the <Rating> block."""
    inner = parse_tagged(text, "Rating")
    try:
        value = int(inner)
    except ValueError as exc:
        raise InvalidRatingError(f"rating is not an integer: {inner!r}") from exc
    if value not in (0, 1):
        raise InvalidRatingError(f"rating must be 0 or 1, got {value}")
    return value


@dataclass(frozen=True)
class CompletionRequest:
    backend_id: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 2048
    seed: int | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.temperature, (int, float)) and math.isfinite(self.temperature) and self.temperature >= 0):
            raise GatewayError(f"temperature must be finite and >= 0, got {self.temperature!r}")
        if not (isinstance(self.max_tokens, int) and self.max_tokens > 0):
            raise GatewayError(f"max_tokens must be > 0, got {self.max_tokens!r}")


@dataclass(frozen=True)
class BackendConfig:
    id: str
    kind: str  # mock | http
    endpoint: str = ""
    model_name: str = ""
    auth_env_var: str = ""
    max_in_flight: int = 4
    retry: dict = field(default_factory=lambda: {"max_attempts": 3, "backoff_base_ms": 100})
    script: list[str] | None = None  # mock only
    script_path: str = ""  # mock only; JSON file holding a list of replies

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise GatewayError(f"backend kind must be mock or http, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise GatewayError(f"http backend {self.id!r} requires an endpoint")
        if self.max_in_flight < 1:
            raise GatewayError("max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "BackendConfig":
        return cls(
            id=d.get("id", ""),
            kind=d.get("kind", ""),
            endpoint=d.get("endpoint", ""),
            model_name=d.get("model_name", ""),
            auth_env_var=d.get("auth_env_var", ""),
            max_in_flight=d.get("max_in_flight", 4),
            retry=d.get("retry", {"max_attempts": 3, "backoff_base_ms": 100}),
            script=d.get("script"),
            script_path=d.get("script_path", ""),
        )


class _MockBackend:
    """Plays back a fixed reply list keyed by call ordinal, not prompt text."""

    def __init__(self, config: BackendConfig):
        replies = list(config.script or [])
        if config.script_path:
            with open(config.script_path, "r", encoding="utf-8") as fh:
                replies.extend(json.load(fh))
        self.replies = replies
        self.ordinal = 0
        self.delay_s = 0.0  # test hook for concurrency assertions

    def complete(self, request: CompletionRequest) -> str:
        ordinal = self.ordinal
        self.ordinal += 1
        if ordinal >= len(self.replies):
            raise ScriptExhaustedError(
                f"backend {request.backend_id!r}: script exhausted at call {ordinal} "
                f"(script holds {len(self.replies)} replies)"
            )
        if self.delay_s:
            time.sleep(self.delay_s)
        return self.replies[ordinal]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, Any]:
    import requests

    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise ConnectionError(str(exc)) from exc
    try:
        body = resp.json()
    except ValueError:
        body = resp.text
    return resp.status_code, body


class _HttpBackend:
    """POSTs a chat-completion-shaped body; retries transport/429/5xx errors.

    Backoff is exponential with full jitter. A transport injection point
    keeps the retry logic testable without a network.
    """

    def __init__(self, config: BackendConfig, transport: Callable | None = None, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.transport = transport or _requests_transport
        self.sleep = sleep
        self._rng = random.Random(0)

    def complete(self, request: CompletionRequest) -> str:
        retry = self.config.retry or {}
        max_attempts = int(retry.get("max_attempts", 3))
        base_ms = float(retry.get("backoff_base_ms", 100))
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.auth_env_var, "") if self.config.auth_env_var else ""
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload: dict[str, Any] = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            payload["seed"] = request.seed

        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(1, max_attempts + 1):
            try:
                status, body = self.transport(self.config.endpoint, payload, headers, 120.0)
            except ConnectionError as exc:
                last_error, rate_limited = exc, False
            else:
                if status == 200:
                    try:
                        return body["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, TypeError) as exc:
                        raise BackendHTTPError(f"malformed completion body: {body!r}") from exc
                if status == 429:
                    last_error, rate_limited = BackendHTTPError("rate limited (429)"), True
                elif 500 <= status < 600:
                    last_error, rate_limited = BackendHTTPError(f"server error ({status})"), False
                else:
                    raise BackendHTTPError(f"HTTP {status}: {body!r}")
            if attempt < max_attempts:
                self.sleep(self._rng.uniform(0, base_ms * (2 ** (attempt - 1))) / 1000.0)
        if rate_limited:
            raise RateLimitedError(f"backend {self.config.id!r}: still rate limited after {max_attempts} attempts")
        raise BackendHTTPError(f"backend {self.config.id!r}: failed after {max_attempts} attempts: {last_error}")


class Gateway:
    """Backend registry + per-backend concurrency caps + prompt log."""

    def __init__(self, templates_dir: str | Path | None = None):
        self._backends: dict[str, Any] = {}
        self._semaphores: dict[str, threading.Semaphore] = {}
        self._in_flight: dict[str, int] = {}
        self.max_in_flight_observed: dict[str, int] = {}
        self._lock = threading.Lock()
        self.log: list[dict] = []
        self._templates = {name: PromptTemplate.from_body(name, body) for name, body in BUILTIN_TEMPLATE_BODIES.items()}
        if templates_dir:
            for path in sorted(Path(templates_dir).glob("*.txt")):
                self._templates[path.stem] = PromptTemplate.from_body(path.stem, path.read_text(encoding="utf-8"))

    # -- backends -----------------------------------------------------------

    def register(self, config: BackendConfig, transport: Callable | None = None) -> None:
        if config.kind == "mock":
            backend: Any = _MockBackend(config)
        else:
            backend = _HttpBackend(config, transport=transport)
        self._backends[config.id] = backend
        self._semaphores[config.id] = threading.Semaphore(config.max_in_flight)
        self._in_flight[config.id] = 0
        self.max_in_flight_observed.setdefault(config.id, 0)

    def backend(self, backend_id: str) -> Any:
        if backend_id not in self._backends:
            raise GatewayError(f"backend {backend_id!r} is not registered")
        return self._backends[backend_id]

    def complete(self, request: CompletionRequest) -> str:
        backend = self.backend(request.backend_id)
        sem = self._semaphores[request.backend_id]
        with sem:
            with self._lock:
                self._in_flight[request.backend_id] += 1
                current = self._in_flight[request.backend_id]
                if current > self.max_in_flight_observed[request.backend_id]:
                    self.max_in_flight_observed[request.backend_id] = current
            try:
                reply = backend.complete(request)
            finally:
                with self._lock:
                    self._in_flight[request.backend_id] -= 1
        with self._lock:
            self.log.append(
                {
                    "backend_id": request.backend_id,
                    "ordinal": len(self.log),
                    "prompt": request.prompt,
                    "response": reply,
                }
            )
        return reply

    def ask(self, backend_id: str, prompt: str, *, temperature: float = 0.0, max_tokens: int = 2048) -> str:
        return self.complete(CompletionRequest(backend_id=backend_id, prompt=prompt, temperature=temperature, max_tokens=max_tokens))

    # -- templates ----------------------------------------------------------

    def template(self, name: str) -> PromptTemplate:
        if name not in self._templates:
            raise TemplateError("unknown template", slot=name)
        return self._templates[name]

    def render(self, name: str, **bindings: str) -> str:
        return render_template(self.template(name), bindings)

    def prompts_for(self, backend_id: str) -> list[str]:
        return [entry["prompt"] for entry in self.log if entry["backend_id"] == backend_id]


def reasoning_bindings(question: str, requirements: str | None = None) -> dict[str, str]:
    """Common bindings for the reasoning-side templates."""
    return {"Q": question, "requirements": requirements if requirements is not None else DEFAULT_STEP_REQUIREMENTS}


def load_gateway(config: dict, transport: Callable | None = None) -> Gateway:
    """Build a gateway from a parsed config file ({backends, templates_dir})."""
    gw = Gateway(templates_dir=config.get("templates_dir") or None)
    for raw in config.get("backends", []):
        gw.register(BackendConfig.from_dict(raw), transport=transport)
    return gw

"""Provider-agnostic LLM access with deterministic replay.

Three modes, selected by ``LLM_MODE``:

* ``mock`` (default): every request is answered from a fixture file looked
  up by the canonical request hash. Fully offline and deterministic.
* ``live``: requests go to an OpenAI-compatible HTTP endpoint.
* ``record``: live, but every response is also written to the fixture
  directory so it can replay later.

Canonical hashing: the request is serialized key-sorted with temperature
rounded to two decimals; the SHA-256 hex digest is the fixture filename.
Transcription requests are keyed by the hash of the audio bytes instead.
"""

from __future__ import annotations

import asyncio
import inspect
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Awaitable, Callable, Optional, Protocol, Union

import httpx

from .canonical import canonical_hash, sha256_hex

logger = logging.getLogger(__name__)

MOCK_STREAM_CHUNK_CHARS = 64

RETRY_BACKOFF_SECONDS = (0.5, 1.0, 2.0)

SUPPORTED_AUDIO_TYPES = ("audio/webm", "audio/wav", "audio/mpeg")

TRANSIENT_STATUS = (429, 500, 502, 503, 504)

ROLES = ("system", "user", "assistant")

MODES = ("mock", "live", "record")

DEFAULT_FIXTURE_DIR = "fixture/llm"


class GatewayError(Exception):
    """Base for all gateway failures."""


class InvalidRequest(GatewayError, ValueError):
    pass


class Timeout(GatewayError):
    def __init__(self, route: str, seconds: float) -> None:
        super().__init__(f"{route} call exceeded {seconds:g}s")
        self.route = route
        self.seconds = seconds


class ProviderError(GatewayError):
    def __init__(self, message: str, status_code: Optional[int] = None, body: str = "") -> None:
        super().__init__(message)
        self.status_code = status_code
        self.body = body


class NetworkError(GatewayError):
    pass


class FixtureMiss(GatewayError):
    """Mock mode saw a request with no recorded fixture. Carries the hash
    so the missing fixture can be recorded."""

    def __init__(self, key: str) -> None:
        super().__init__(f"no fixture for request hash {key}")
        self.key = key


class UnsupportedMedia(GatewayError):
    pass


class Route:
    chat = "chat"
    suggestions = "suggestions"
    website_summary = "website_summary"
    section_generation = "section_generation"
    pitch_prep = "pitch_prep"
    transcription = "transcription"

    all = (chat, suggestions, website_summary, section_generation, pitch_prep, transcription)


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise InvalidRequest(f"unknown message role: {self.role!r}")


@dataclass(frozen=True)
class ProviderRequest:
    route: str
    messages: tuple[Message, ...] = ()
    temperature: float = 0.0
    max_tokens: int = 1
    stream: bool = False
    audio: Optional[bytes] = None
    media_type: Optional[str] = None

    def __post_init__(self) -> None:
        if self.route not in Route.all:
            raise InvalidRequest(f"unknown route: {self.route!r}")
        if self.route == Route.transcription:
            if self.messages:
                raise InvalidRequest("transcription requests carry audio, not messages")
            if not self.audio:
                raise InvalidRequest("transcription requires nonempty audio")
            if self.media_type not in SUPPORTED_AUDIO_TYPES:
                raise UnsupportedMedia(f"unsupported media type: {self.media_type!r}")
            return
        if self.audio is not None or self.media_type is not None:
            raise InvalidRequest(f"{self.route} requests must not carry audio")
        if not self.messages:
            raise InvalidRequest("messages must be nonempty")
        if self.messages[0].role != "system":
            raise InvalidRequest("first message must have the system role")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidRequest(f"temperature out of range: {self.temperature}")
        if self.max_tokens <= 0:
            raise InvalidRequest(f"max_tokens must be positive: {self.max_tokens}")

    def canonical_key(self) -> str:
        if self.route == Route.transcription:
            assert self.audio is not None
            return sha256_hex(self.audio)
        return canonical_hash({
            "route": self.route,
            "messages": [{"role": m.role, "content": m.content} for m in self.messages],
            "temperature": round(self.temperature, 2),
            "max_tokens": self.max_tokens,
            "stream": self.stream,
        })


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def to_wire(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens}


@dataclass(frozen=True)
class ProviderResponse:
    content: str
    finish_reason: str
    usage: Usage
    provider_model: str

    def __post_init__(self) -> None:
        if self.finish_reason not in ("stop", "length", "error"):
            raise ValueError(f"unknown finish reason: {self.finish_reason!r}")
        if self.finish_reason == "stop" and not self.content:
            raise ValueError("content must be nonempty when finish_reason is stop")

    def to_wire(self) -> dict:
        return {
            "content": self.content,
            "finish_reason": self.finish_reason,
            "usage": self.usage.to_wire(),
            "provider_model": self.provider_model,
        }


def _response_from_wire(data: dict) -> ProviderResponse:
    usage = data.get("usage", {})
    return ProviderResponse(
        content=data["content"],
        finish_reason=data["finish_reason"],
        usage=Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)),
        provider_model=data["provider_model"],
    )


@dataclass(frozen=True)
class RouteConfig:
    model: str
    temperature: float
    max_tokens: int
    timeout_seconds: float


# Temperatures: 0.7 conversational, 0.3 where structure matters, 0.0 for
# summaries. Timeouts: long only for full-section generation.
DEFAULT_ROUTES: dict[str, RouteConfig] = {
    Route.chat: RouteConfig("gpt-3.5-turbo", 0.7, 512, 30.0),
    Route.suggestions: RouteConfig("gpt-4o-mini", 0.7, 1500, 30.0),
    Route.website_summary: RouteConfig("gpt-3.5-turbo", 0.0, 800, 60.0),
    Route.section_generation: RouteConfig("gpt-4-turbo", 0.3, 1500, 120.0),
    Route.pitch_prep: RouteConfig("gpt-3.5-turbo", 0.7, 600, 30.0),
    Route.transcription: RouteConfig("whisper-1", 0.0, 1, 60.0),
}

# Env override → routes it applies to. LLM_MODEL_CHAT covers the whole
# conversational family that shares one model by default.
_MODEL_ENV_ROUTES = {
    "LLM_MODEL_CHAT": (Route.chat, Route.website_summary, Route.pitch_prep),
    "LLM_MODEL_SECTION": (Route.section_generation,),
    "LLM_MODEL_SUGGEST": (Route.suggestions,),
    "LLM_MODEL_TRANSCRIBE": (Route.transcription,),
}


@dataclass(frozen=True)
class GatewayConfig:
    mode: str = "mock"
    api_base: str = ""
    api_key: str = ""
    fixture_dir: Path = Path(DEFAULT_FIXTURE_DIR)
    routes: dict[str, RouteConfig] = field(default_factory=lambda: dict(DEFAULT_ROUTES))

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown LLM mode: {self.mode!r}")
        missing = [r for r in Route.all if r not in self.routes]
        if missing:
            raise ValueError(f"routes missing configuration: {missing}")
        blank = [r for r, cfg in self.routes.items() if not cfg.model]
        if blank:
            raise ValueError(f"routes with no model configured: {blank}")
        if self.mode in ("live", "record") and not self.api_base:
            raise ValueError(f"LLM_API_BASE required in {self.mode} mode")

    @classmethod
    def from_env(cls, environ: Optional[dict] = None) -> "GatewayConfig":
        env = os.environ if environ is None else environ
        routes = dict(DEFAULT_ROUTES)
        for var, targets in _MODEL_ENV_ROUTES.items():
            model = env.get(var)
            if model is not None:
                for route in targets:
                    routes[route] = replace(routes[route], model=model)
        return cls(
            mode=env.get("LLM_MODE", "mock"),
            api_base=env.get("LLM_API_BASE", ""),
            api_key=env.get("LLM_API_KEY", ""),
            fixture_dir=Path(env.get("LLM_FIXTURE_DIR", DEFAULT_FIXTURE_DIR)),
            routes=routes,
        )


class Provider(Protocol):
    async def complete(self, request: ProviderRequest, model: str) -> ProviderResponse: ...

    async def transcribe(self, request: ProviderRequest, model: str) -> str: ...


def fixture_path(fixture_dir: Path, key: str) -> Path:
    return fixture_dir / key


def write_fixture(fixture_dir: Path, request: ProviderRequest, response: ProviderResponse) -> Path:
    """Store a replay fixture; returns the file path (filename = hash)."""
    key = request.canonical_key()
    record: dict = {"key": key, "response": response.to_wire()}
    if request.route != Route.transcription:
        record["request"] = {
            "route": request.route,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": round(request.temperature, 2),
            "max_tokens": request.max_tokens,
            "stream": request.stream,
        }
    else:
        record["request"] = {"route": request.route, "media_type": request.media_type}
    fixture_dir.mkdir(parents=True, exist_ok=True)
    path = fixture_path(fixture_dir, key)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class ReplayProvider:
    """Answers from fixture files; raises FixtureMiss (with the hash) otherwise."""

    def __init__(self, fixture_dir: Path) -> None:
        self._dir = fixture_dir

    def _load(self, key: str) -> dict:
        path = fixture_path(self._dir, key)
        if not path.is_file():
            raise FixtureMiss(key)
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProviderError(f"unreadable fixture {key}: {exc}") from exc
        if record.get("key") != key:
            raise ProviderError(f"fixture {key} declares mismatched key {record.get('key')!r}")
        return record

    async def complete(self, request: ProviderRequest, model: str) -> ProviderResponse:
        record = self._load(request.canonical_key())
        try:
            return _response_from_wire(record["response"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"invalid fixture response: {exc}") from exc

    async def transcribe(self, request: ProviderRequest, model: str) -> str:
        record = self._load(request.canonical_key())
        try:
            response = _response_from_wire(record["response"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"invalid fixture response: {exc}") from exc
        return response.content


class LiveProvider:
    """OpenAI-compatible HTTP provider (chat completions + audio transcriptions)."""

    def __init__(self, api_base: str, api_key: str, client: Optional[httpx.AsyncClient] = None) -> None:
        self._base = api_base.rstrip("/")
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.AsyncClient(timeout=None)

    async def aclose(self) -> None:
        await self._client.aclose()

    async def _post(self, url: str, **kwargs) -> httpx.Response:
        try:
            response = await self._client.post(url, headers=self._headers, **kwargs)
        except httpx.HTTPError as exc:
            raise NetworkError(str(exc)) from exc
        if response.status_code != 200:
            raise ProviderError(
                f"provider returned {response.status_code}",
                status_code=response.status_code,
                body=response.text[:2000],
            )
        return response

    async def complete(self, request: ProviderRequest, model: str) -> ProviderResponse:
        payload = {
            "model": model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        response = await self._post(f"{self._base}/chat/completions", json=payload)
        try:
            body = response.json()
            choice = body["choices"][0]
            usage = body.get("usage", {})
            return ProviderResponse(
                content=choice["message"]["content"] or "",
                finish_reason=choice.get("finish_reason", "stop"),
                usage=Usage(usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)),
                provider_model=body.get("model", model),
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc

    async def transcribe(self, request: ProviderRequest, model: str) -> str:
        assert request.audio is not None and request.media_type is not None
        files = {"file": ("audio", request.audio, request.media_type)}
        response = await self._post(
            f"{self._base}/audio/transcriptions",
            data={"model": model},
            files=files,
        )
        try:
            return response.json()["text"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed transcription response: {exc}") from exc


class RecordingProvider:
    """Live provider that captures every response as a replay fixture."""

    def __init__(self, live: LiveProvider, fixture_dir: Path) -> None:
        self._live = live
        self._dir = fixture_dir

    async def complete(self, request: ProviderRequest, model: str) -> ProviderResponse:
        response = await self._live.complete(request, model)
        write_fixture(self._dir, request, response)
        return response

    async def transcribe(self, request: ProviderRequest, model: str) -> str:
        text = await self._live.transcribe(request, model)
        response = ProviderResponse(
            content=text, finish_reason="stop", usage=Usage(), provider_model=model
        )
        write_fixture(self._dir, request, response)
        return text


Sink = Callable[[str], Union[None, Awaitable[None]]]


class Gateway:
    """Front door for all model calls: routing, retries, timeouts, streaming."""

    def __init__(
        self,
        config: Optional[GatewayConfig] = None,
        *,
        provider: Optional[Provider] = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ) -> None:
        self.config = config or GatewayConfig.from_env()
        if provider is not None:
            self._provider = provider
        elif self.config.mode == "mock":
            self._provider = ReplayProvider(self.config.fixture_dir)
        elif self.config.mode == "live":
            self._provider = LiveProvider(self.config.api_base, self.config.api_key)
        else:
            live = LiveProvider(self.config.api_base, self.config.api_key)
            self._provider = RecordingProvider(live, self.config.fixture_dir)
        self._sleep = sleep

    def route_config(self, route: str) -> RouteConfig:
        return self.config.routes[route]

    def build_request(
        self,
        route: str,
        messages: tuple[Message, ...],
        *,
        temperature: Optional[float] = None,
        max_tokens: Optional[int] = None,
        stream: bool = False,
    ) -> ProviderRequest:
        """Assemble a request using the route's configured defaults."""
        cfg = self.route_config(route)
        return ProviderRequest(
            route=route,
            messages=messages,
            temperature=cfg.temperature if temperature is None else temperature,
            max_tokens=cfg.max_tokens if max_tokens is None else max_tokens,
            stream=stream,
        )

    @staticmethod
    def _transient(exc: GatewayError) -> bool:
        if isinstance(exc, NetworkError):
            return True
        return isinstance(exc, ProviderError) and exc.status_code in TRANSIENT_STATUS

    async def _with_retries(self, call: Callable[[], Awaitable]):
        attempt = 0
        while True:
            try:
                return await call()
            except GatewayError as exc:
                if attempt >= len(RETRY_BACKOFF_SECONDS) or not self._transient(exc):
                    raise
                delay = RETRY_BACKOFF_SECONDS[attempt]
                attempt += 1
                logger.warning("transient provider failure (%s); retry %d in %.1fs", exc, attempt, delay)
                await self._sleep(delay)

    async def _bounded(self, route: str, call: Callable[[], Awaitable]):
        timeout = self.route_config(route).timeout_seconds
        try:
            return await asyncio.wait_for(self._with_retries(call), timeout)
        except asyncio.TimeoutError:
            raise Timeout(route, timeout) from None

    async def complete(self, request: ProviderRequest) -> ProviderResponse:
        if request.route == Route.transcription:
            raise InvalidRequest("use transcribe() for the transcription route")
        model = self.route_config(request.route).model
        return await self._bounded(
            request.route, lambda: self._provider.complete(request, model)
        )

    async def complete_stream(self, request: ProviderRequest, sink: Sink) -> ProviderResponse:
        """Deliver content incrementally; concatenated increments equal the
        returned response's content. Increments are fixed-size chunks of the
        completed response, 64 characters in mock mode and the same bound
        elsewhere, so stream and non-stream output are always identical."""
        if not request.stream:
            raise InvalidRequest("complete_stream requires request.stream = true")
        response = await self.complete(request)
        content = response.content
        for start in range(0, len(content), MOCK_STREAM_CHUNK_CHARS):
            result = sink(content[start : start + MOCK_STREAM_CHUNK_CHARS])
            if inspect.isawaitable(result):
                await result
        return response

    async def transcribe(self, audio: bytes, media_type: str) -> str:
        request = ProviderRequest(route=Route.transcription, audio=audio, media_type=media_type)
        model = self.route_config(Route.transcription).model
        return await self._bounded(
            Route.transcription, lambda: self._provider.transcribe(request, model)
        )

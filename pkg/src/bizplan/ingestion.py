"""Builds a BusinessContext from a website or an onboarding chat transcript.

Website text is fetched (live) or read from local snapshot files (fixture
mode, selected by ``INGEST_MODE``), stripped to plain text, and capped.
Extraction itself is delegated to the model via the ``website_summary``
route with a prompt that demands labeled lines:

    NAME: <business name>
    SUMMARY: <short plain-text summary>
    FACT/<category>: <one statement>

The line parser is forgiving (unknown lines ignored, unknown categories
filed under ``other``); a reply with no usable lines triggers exactly one
reformat retry before ExtractionUnparseable.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import urllib.robotparser
from dataclasses import dataclass
from datetime import datetime
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional
from urllib.parse import urlsplit, urlunsplit

import httpx

from .clock import Clock, SystemClock
from .gateway import Gateway, Message, Route
from .model import BusinessContext, Fact, FactCategory, Source, SUMMARY_MAX_CHARS

logger = logging.getLogger(__name__)

PAGE_CHAR_CAP = 24_000

DEFAULT_USER_AGENT = "bizplan-ingest/1.0"

PER_HOST_CONCURRENCY = 2

DEFAULT_PAGE_FIXTURE_DIR = "fixture"
PAGE_INDEX_FILENAME = "pages.json"

EXTRACTION_SYSTEM_PROMPT = (
    "You extract business facts from raw website or conversation text. "
    "Reply using only labeled lines, one item per line, in this exact layout:\n"
    "NAME: <the business name, or leave the line out if unknown>\n"
    "SUMMARY: <two or three plain sentences describing the business>\n"
    "FACT/<category>: <one concrete statement>\n"
    "Valid categories: offering, customers, location, stage, team, pricing, other. "
    "Emit between 1 and 10 FACT lines. No other text, no markdown."
)

REFORMAT_INSTRUCTION = (
    "Your previous reply did not follow the required layout. Reply again using "
    "only NAME:, SUMMARY:, and FACT/<category>: lines as instructed."
)


class IngestError(Exception):
    pass


class InvalidUrl(IngestError, ValueError):
    pass


class FetchFailed(IngestError):
    def __init__(self, url: str, status: Optional[int] = None, reason: str = "") -> None:
        detail = f"status {status}" if status is not None else reason
        super().__init__(f"fetch failed for {url}: {detail}")
        self.url = url
        self.status = status


class NotHtml(IngestError):
    pass


class RobotsDisallowed(IngestError):
    pass


class ExtractionUnparseable(IngestError):
    pass


@dataclass(frozen=True)
class ExtractedPage:
    url: str
    title: str
    text: str
    fetched_at: datetime
    truncated: bool


class _TextExtractor(HTMLParser):
    """Collects visible text; drops script/style/noscript and tags."""

    _SKIP = {"script", "style", "noscript", "template"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.title_parts: list[str] = []
        self._skip_depth = 0
        self._in_title = False

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        # Block-level boundaries become whitespace so words never fuse.
        self.parts.append(" ")

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "title":
            self._in_title = False
        self.parts.append(" ")

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
        else:
            self.parts.append(data)


def strip_html(html: str) -> tuple[str, str]:
    """Return (title, collapsed visible text)."""
    extractor = _TextExtractor()
    extractor.feed(html)
    extractor.close()
    title = " ".join("".join(extractor.title_parts).split())
    text = " ".join("".join(extractor.parts).split())
    return title, text


def _validate_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrl(f"url must be absolute http(s): {url!r}")


_host_semaphores: dict[tuple[int, str], asyncio.Semaphore] = {}


def _host_semaphore(host: str) -> asyncio.Semaphore:
    key = (id(asyncio.get_running_loop()), host)
    if key not in _host_semaphores:
        _host_semaphores[key] = asyncio.Semaphore(PER_HOST_CONCURRENCY)
    return _host_semaphores[key]


def _load_fixture_page(url: str, fixture_dir: Path) -> str:
    index_path = fixture_dir / PAGE_INDEX_FILENAME
    if not index_path.is_file():
        raise FetchFailed(url, reason=f"no page index at {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    name = index.get(url)
    if name is None:
        raise FetchFailed(url, status=404, reason="url not in fixture index")
    return (fixture_dir / name).read_text(encoding="utf-8")


async def _check_robots(client: httpx.AsyncClient, url: str, user_agent: str) -> None:
    parts = urlsplit(url)
    robots_url = urlunsplit((parts.scheme, parts.netloc, "/robots.txt", "", ""))
    try:
        response = await client.get(robots_url, headers={"User-Agent": user_agent})
    except httpx.HTTPError:
        return  # unreachable robots.txt does not block the fetch
    if response.status_code != 200:
        return
    parser = urllib.robotparser.RobotFileParser()
    parser.parse(response.text.splitlines())
    if not parser.can_fetch(user_agent, url):
        raise RobotsDisallowed(f"robots.txt disallows {url}")


async def fetch_and_strip(
    url: str,
    *,
    mode: Optional[str] = None,
    fixture_dir: Optional[Path] = None,
    clock: Optional[Clock] = None,
    client: Optional[httpx.AsyncClient] = None,
    user_agent: Optional[str] = None,
) -> ExtractedPage:
    """Fetch one page and reduce it to capped plain text."""
    _validate_url(url)
    mode = mode or os.environ.get("INGEST_MODE", "fixture")
    if mode not in ("live", "fixture"):
        raise IngestError(f"unknown INGEST_MODE: {mode!r}")
    clock = clock or SystemClock()
    user_agent = user_agent or os.environ.get("INGEST_USER_AGENT", DEFAULT_USER_AGENT)

    if mode == "fixture":
        html = _load_fixture_page(url, fixture_dir or Path(DEFAULT_PAGE_FIXTURE_DIR))
    else:
        own_client = client is None
        client = client or httpx.AsyncClient(follow_redirects=True, timeout=30.0)
        try:
            async with _host_semaphore(urlsplit(url).netloc):
                await _check_robots(client, url, user_agent)
                try:
                    response = await client.get(url, headers={"User-Agent": user_agent})
                except httpx.HTTPError as exc:
                    raise FetchFailed(url, reason=str(exc)) from exc
            if response.status_code != 200:
                raise FetchFailed(url, status=response.status_code)
            content_type = response.headers.get("content-type", "")
            if "html" not in content_type.lower():
                raise NotHtml(f"content-type {content_type!r} for {url}")
            html = response.text
        finally:
            if own_client:
                await client.aclose()

    title, text = strip_html(html)
    truncated = len(text) > PAGE_CHAR_CAP
    return ExtractedPage(
        url=url,
        title=title,
        text=text[:PAGE_CHAR_CAP],
        fetched_at=clock.now(),
        truncated=truncated,
    )


def _parse_extraction(reply: str) -> tuple[str, str, list[Fact]]:
    name = ""
    summary_parts: list[str] = []
    facts: list[Fact] = []
    for line in reply.splitlines():
        line = line.strip()
        if not line:
            continue
        label, _, value = line.partition(":")
        label = label.strip().upper()
        value = value.strip()
        if not value:
            continue
        if label == "NAME":
            name = name or value
        elif label == "SUMMARY":
            summary_parts.append(value)
        elif label.startswith("FACT/") or label.startswith("FACT "):
            raw_category = label[5:].strip().lower()
            try:
                category = FactCategory(raw_category)
            except ValueError:
                category = FactCategory.other
            facts.append(Fact(category, value))
    summary = " ".join(summary_parts)[:SUMMARY_MAX_CHARS]
    if not summary.strip() and not facts:
        raise ExtractionUnparseable("reply contained no SUMMARY or FACT lines")
    return name, summary, facts


def extraction_request(gateway: Gateway, raw_text: str):
    """The exact request `context_from_*` sends; exposed for fixture recording."""
    messages = (
        Message("system", EXTRACTION_SYSTEM_PROMPT),
        Message("user", raw_text),
    )
    return gateway.build_request(Route.website_summary, messages)


def reformat_request(gateway: Gateway, base_request, previous_reply: str):
    """Follow-up request asking the model to restate `previous_reply` in the label grammar."""
    return gateway.build_request(
        Route.website_summary,
        base_request.messages
        + (Message("assistant", previous_reply), Message("user", REFORMAT_INSTRUCTION)),
    )


def render_transcript(transcript: list[tuple[str, str]]) -> str:
    return "\n".join(f"{role}: {text}" for role, text in transcript)


def chat_extraction_request(gateway: Gateway, transcript: list[tuple[str, str]]):
    return extraction_request(gateway, render_transcript(transcript))


async def _extract(gateway: Gateway, raw_text: str, source: Source) -> BusinessContext:
    request = extraction_request(gateway, raw_text)
    response = await gateway.complete(request)
    try:
        name, summary, facts = _parse_extraction(response.content)
    except ExtractionUnparseable:
        logger.info("extraction reply unparseable; issuing reformat retry")
        retry = reformat_request(gateway, request, response.content)
        retry_response = await gateway.complete(retry)
        name, summary, facts = _parse_extraction(retry_response.content)
    return BusinessContext(
        business_name=name, summary=summary, facts=tuple(facts), source=source
    )


async def context_from_page(page: ExtractedPage, gateway: Gateway) -> BusinessContext:
    if not page.text.strip():
        raise ValueError("page text must be nonempty")
    return await _extract(gateway, page.text, Source(kind="website", url=page.url))


async def context_from_chat(
    transcript: list[tuple[str, str]],
    gateway: Gateway,
    *,
    conversation_id: str,
) -> BusinessContext:
    if not any(role == "user" for role, _ in transcript):
        raise ValueError("transcript must contain at least one user message")
    source = Source(kind="chat", conversation_id=conversation_id)
    return await _extract(gateway, render_transcript(transcript), source)


__all__ = [
    "ExtractedPage",
    "ExtractionUnparseable",
    "FetchFailed",
    "IngestError",
    "InvalidUrl",
    "NotHtml",
    "RobotsDisallowed",
    "chat_extraction_request",
    "context_from_chat",
    "context_from_page",
    "extraction_request",
    "fetch_and_strip",
    "reformat_request",
    "strip_html",
    "PAGE_CHAR_CAP",
]

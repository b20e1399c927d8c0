import asyncio

import pytest

from bizplan.clock import FixedClock
from bizplan.gateway import (
    Gateway,
    GatewayConfig,
    Message,
    ProviderResponse,
    Usage,
    write_fixture,
)


def run(coro):
    return asyncio.new_event_loop().run_until_complete(coro)


@pytest.fixture
def fixture_dir(tmp_path):
    d = tmp_path / "llm"
    d.mkdir()
    return d


@pytest.fixture
def gateway(fixture_dir):
    return Gateway(GatewayConfig(mode="mock", fixture_dir=fixture_dir))


@pytest.fixture
def clock():
    return FixedClock()


def canned(gateway_or_dir, request, content, *, finish_reason="stop", model="test-model"):
    """Record a fixture answering `request` with `content`; returns the path."""
    fixture_dir = getattr(gateway_or_dir, "config", None)
    fixture_dir = fixture_dir.fixture_dir if fixture_dir else gateway_or_dir
    response = ProviderResponse(
        content=content,
        finish_reason=finish_reason,
        usage=Usage(prompt_tokens=1, completion_tokens=1),
        provider_model=model,
    )
    return write_fixture(fixture_dir, request, response)


def system(text):
    return Message(role="system", content=text)


def user(text):
    return Message(role="user", content=text)

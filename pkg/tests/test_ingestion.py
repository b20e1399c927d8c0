import json

import pytest

from bizplan import ingestion
from bizplan.clock import FixedClock
from bizplan.gateway import Route
from bizplan.ingestion import (
    ExtractedPage,
    ExtractionUnparseable,
    InvalidUrl,
    PAGE_CHAR_CAP,
    context_from_chat,
    context_from_page,
    fetch_and_strip,
    strip_html,
)
from bizplan.model import FactCategory

from .conftest import canned, run

HTML = """
<html><head><title>Fuego Coffee</title>
<style>body { color: red; }</style>
<script>alert("nope");</script>
</head>
<body>
<h1>Small-batch roasting</h1>
<p>We roast <b>arabica</b> beans weekly.</p>
<noscript>enable js</noscript>
</body></html>
"""


def test_strip_html_removes_script_style_and_tags():
    title, text = strip_html(HTML)
    assert title == "Fuego Coffee"
    assert "alert" not in text
    assert "color: red" not in text
    assert "enable js" not in text
    assert "Small-batch roasting" in text
    assert "arabica" in text
    # tags become token boundaries, never concatenated words
    assert "roastingWe" not in text
    assert "roasting We" in text


def test_strip_html_collapses_whitespace():
    _, text = strip_html("<p>a\n\n   b</p>")
    assert text == "a b"


def _write_page(tmp_path, url, html):
    (tmp_path / "site.html").write_text(html, encoding="utf-8")
    (tmp_path / "pages.json").write_text(json.dumps({url: "site.html"}))


def test_fetch_and_strip_fixture_mode(tmp_path):
    url = "https://example.com/coffee"
    _write_page(tmp_path, url, HTML)
    page = run(fetch_and_strip(url, mode="fixture", fixture_dir=tmp_path, clock=FixedClock()))
    assert page.url == url
    assert page.title == "Fuego Coffee"
    assert not page.truncated
    assert page.fetched_at.year == 2025


def test_fetch_and_strip_unknown_fixture_url(tmp_path):
    _write_page(tmp_path, "https://example.com/a", HTML)
    with pytest.raises(ingestion.FetchFailed):
        run(
            fetch_and_strip(
                "https://example.com/other", mode="fixture", fixture_dir=tmp_path,
                clock=FixedClock(),
            )
        )


def test_fetch_rejects_bad_url(tmp_path):
    for bad in ("ftp://example.com", "not a url", "file:///etc/passwd", "//host/path"):
        with pytest.raises(InvalidUrl):
            run(fetch_and_strip(bad, mode="fixture", fixture_dir=tmp_path, clock=FixedClock()))


def test_page_cap_sets_truncated_flag(tmp_path):
    url = "https://example.com/long"
    body = "word " * (PAGE_CHAR_CAP // 2)
    _write_page(tmp_path, url, f"<html><title>t</title><body><p>{body}</p></body></html>")
    page = run(fetch_and_strip(url, mode="fixture", fixture_dir=tmp_path, clock=FixedClock()))
    assert page.truncated
    assert len(page.text) == PAGE_CHAR_CAP


# Extraction parsing ------------------------------------------------------------

def make_page(text="We are Fuego Coffee, a roaster in Pittsburgh."):
    return ExtractedPage(
        url="https://example.com",
        title="Fuego",
        text=text,
        fetched_at=FixedClock().now(),
        truncated=False,
    )


def extraction_fixture(gateway, page, reply):
    req = ingestion.extraction_request(gateway, page.text)
    canned(gateway, req, reply)
    return req


def test_context_from_page_parses_labeled_lines(gateway):
    page = make_page()
    reply = (
        "NAME: Fuego Coffee\n"
        "SUMMARY: A small-batch coffee roaster.\n"
        "SUMMARY: Serves wholesale accounts.\n"
        "FACT/offering: Sells roasted beans.\n"
        "FACT/location: Based in Pittsburgh.\n"
        "FACT/mystery: Unknown category becomes other.\n"
    )
    extraction_fixture(gateway, page, reply)
    context = run(context_from_page(page, gateway))
    assert context.business_name == "Fuego Coffee"
    assert context.summary == "A small-batch coffee roaster. Serves wholesale accounts."
    assert [f.category for f in context.facts] == [
        FactCategory.offering,
        FactCategory.location,
        FactCategory.other,
    ]
    assert context.source.kind == "website"
    assert context.source.url == page.url


def test_context_from_page_retries_once_on_unparseable(gateway):
    page = make_page()
    base = extraction_fixture(gateway, page, "no labels at all, just prose")
    retry_req = ingestion.reformat_request(gateway, base, "no labels at all, just prose")
    canned(gateway, retry_req, "NAME: Fuego\nSUMMARY: Roaster.\nFACT/offering: Coffee.")
    context = run(context_from_page(page, gateway))
    assert context.business_name == "Fuego"


def test_context_from_page_gives_up_after_retry(gateway):
    page = make_page()
    base = extraction_fixture(gateway, page, "still junk")
    retry_req = ingestion.reformat_request(gateway, base, "still junk")
    canned(gateway, retry_req, "more junk with no labels")
    with pytest.raises(ExtractionUnparseable):
        run(context_from_page(page, gateway))


def test_context_from_page_requires_text(gateway):
    with pytest.raises(ValueError):
        run(context_from_page(make_page(text="   "), gateway))


def test_summary_truncated_to_cap(gateway):
    page = make_page()
    reply = "NAME: X\nSUMMARY: " + "s" * 3000
    extraction_fixture(gateway, page, reply)
    context = run(context_from_page(page, gateway))
    assert len(context.summary) == 2000


def test_context_from_chat(gateway):
    transcript = [
        ("assistant", "Tell me about your business."),
        ("user", "I run a bakery in Omaha specializing in sourdough."),
    ]
    req = ingestion.chat_extraction_request(gateway, transcript)
    canned(gateway, req, "NAME: Omaha Sourdough\nSUMMARY: A bakery.\nFACT/offering: Bread.")
    context = run(context_from_chat(transcript, gateway, conversation_id="conv-000001"))
    assert context.business_name == "Omaha Sourdough"
    assert context.source.kind == "chat"
    assert context.source.conversation_id == "conv-000001"


def test_context_from_chat_requires_user_turn(gateway):
    with pytest.raises(ValueError):
        run(
            context_from_chat(
                [("assistant", "hello")], gateway, conversation_id="conv-1"
            )
        )


def test_extraction_uses_website_summary_route(gateway):
    req = ingestion.extraction_request(gateway, make_page().text)
    assert req.route == Route.website_summary
    assert req.temperature == 0.0

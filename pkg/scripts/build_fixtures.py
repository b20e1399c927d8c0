#!/usr/bin/env python3
"""Author the offline fixture corpus and freeze the golden outputs.

Everything under fixture/ is hand-authored input: a flattened website
snapshot, a voice note, and the provider replies the mock gateway serves.
Everything under golden/ is produced by running the real pipeline and the
real HTTP service over those inputs, then frozen for the test suite.
Rerunning the script from a clean tree is idempotent.
"""

import asyncio
import json
import shutil
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from bizplan import export, markup
from bizplan.clock import FixedClock
from bizplan.gateway import (
    Gateway,
    GatewayConfig,
    ProviderRequest,
    ProviderResponse,
    Route,
    Usage,
    write_fixture,
)
from bizplan.generator import assemble_section_prompt, generate_draft, section_request
from bizplan.ingestion import context_from_page, extraction_request, fetch_and_strip
from bizplan.model import Goal, PlanDocument
from bizplan.pitch import pitch_request
from bizplan.sections import CANONICAL_ORDER, SectionId
from bizplan.service.app import create_app
from bizplan.service.config import load_settings
from bizplan.suggestions import (
    ChatTurn,
    apply_edit,
    current_topic,
    explore_target,
    propose_edit,
    propose_edit_request,
    suggest_prompts_request,
)

REPO = Path(__file__).resolve().parents[1]
FIXTURE = REPO / "fixture"
LLM_DIR = FIXTURE / "llm"
GOLDEN = REPO / "golden"

SITE_URL = "https://fuegocoffee.example/"
OWNER = "acct-000001"
DOCUMENT_ID = "doc-000001"
AUTH_TOKEN = "fixture-session-token"

GOALS = [Goal(id="g1", label="Apply for the city grant", detail="due in March")]

# Flattened snapshot of the roaster's site (home, wholesale, about pages).
SITE_HTML = """<!DOCTYPE html>
<html lang="en">
<head>
<title>Fuego Coffee | Small-Batch Roaster in Pittsburgh</title>
<style>nav { display: flex; }</style>
<script>window.dataLayer = [];</script>
</head>
<body>
<nav>Home | Wholesale | About</nav>

<h1>Fuego Coffee</h1>
<p>We are a small-batch coffee roaster in Pittsburgh's Lawrenceville neighborhood.
Every lot is single-origin arabica, roasted in 12-kilogram batches and delivered
to our wholesale partners within 48 hours of roasting.</p>
<p>Visit the tasting room Thursday through Sunday for pour-overs and retail bags.</p>

<h2>Wholesale</h2>
<p>We currently supply three local cafes with roasted-to-order five pound bags.
Wholesale pricing starts at fourteen dollars per twelve-ounce equivalent, with free
first-week replacement if a roast misses spec. Ask about our subscription program
for offices and restaurants.</p>

<h2>About</h2>
<p>Fuego Coffee was founded in 2021 by José Alvarez, a former cafe manager who
outgrew a one-kilogram garage sample roaster in his first year. Today the team
includes two full-time employees and a part-time roaster. Our mission is simple:
coffee roasted close to the people who drink it.</p>

<footer>Fuego Coffee LLC, Pittsburgh PA</footer>
</body>
</html>
"""

# EBML magic plus fixed filler; stands in for a short voice note.
AUDIO_BYTES = b"\x1aE\xdf\xa3" + b"\x42\x86\x81\x01" + b"fuego-voice-note-" * 4
TRANSCRIPT_TEXT = "change the founding year to twenty twenty-two"

EXTRACTION_REPLY = """\
NAME: Fuego Coffee
SUMMARY: Fuego Coffee is a small-batch coffee roaster in Pittsburgh's Lawrenceville neighborhood. It roasts single-origin arabica in 12-kilogram batches, delivers to wholesale partners within 48 hours of roasting, and runs a walk-in tasting room.
FACT/offering: Roasts single-origin arabica beans in 12-kilogram batches.
FACT/customers: Supplies three local cafes and sells retail from a tasting room.
FACT/location: Operates from Pittsburgh's Lawrenceville neighborhood.
FACT/stage: Founded in 2021 with two full-time employees and a part-time roaster.
FACT/team: Run by founder José Alvarez, a former cafe manager.
FACT/pricing: Wholesale pricing starts at fourteen dollars per twelve-ounce equivalent.
"""

SECTION_BODIES = {
    SectionId.EXECUTIVE_SUMMARY: """\
# Fuego Coffee at a Glance

Fuego Coffee roasts **single-origin arabica** in small batches and delivers to Pittsburgh cafes within 48 hours of roasting. The tasting room in Lawrenceville anchors a growing retail following.

To meet wholesale demand we are seeking city grant funding for a second roaster and a dedicated packaging line. This plan lays out the market, the team, and the numbers behind that request.""",
    SectionId.COMPANY_DESCRIPTION: """\
## Who We Are

Fuego Coffee was founded in 2021 by José Alvarez, a former cafe manager who outgrew a garage sample roaster in his first year.

- Registered as a Pennsylvania LLC
- Two full-time employees plus one part-time roaster
- Tasting room open Thursday through Sunday

Our mission is simple: coffee roasted close to the people who drink it.""",
    SectionId.MARKET_ANALYSIS: """\
## Local Demand

Pittsburgh's specialty coffee scene has expanded steadily, with *third-wave* cafes opening across the East End. Most still source beans from out-of-state roasters, paying freight and losing freshness.

## Competition

- Two established roasters serve the premium segment
- Grocery brands own the value shelf
- Nobody else offers roast-to-door delivery inside 48 hours""",
    SectionId.ORGANIZATION_MANAGEMENT: """\
## Team

José Alvarez leads roasting and wholesale accounts. Mia Torres manages the tasting room and the retail channel.

An advisory relationship with a regional importer covers sourcing and customs paperwork. Payroll and bookkeeping are outsourced to a local firm.""",
    SectionId.SERVICE_PRODUCT_LINE: """\
## What We Sell

- Wholesale five pound bags for cafes, roasted to order
- Retail twelve ounce bags in three rotating origins
- Monthly subscription boxes shipped regionally

Every lot is cupped twice before release. Wholesale partners get free first-week replacement if a roast misses spec.""",
    SectionId.MARKETING_SALES: """\
## Channels

The wholesale pipeline grows through direct tastings at cafes and referrals from current accounts. Retail relies on the tasting room, a monthly newsletter, and farmers market pop-ups from May through October.

We spend nothing on paid advertising today; the grant application includes a modest budget for local print and transit placements.""",
    SectionId.FUNDING_REQUEST: """\
## The Ask

We are requesting **$40,000** through the city small business grant to purchase a second 12-kilogram roaster and a semi-automatic bagging line.

- The second roaster doubles weekly capacity
- The bagging line frees twelve staff hours per week
- Remaining funds cover six months of added utilities""",
    SectionId.FINANCIAL_PROJECTIONS: """\
## Projections

Current monthly revenue averages $18,500 across wholesale and retail. With the second roaster we project $31,000 monthly within a year, holding gross margin near 38 percent.

Break-even on the new equipment lands in month eleven under the conservative case.""",
    SectionId.APPENDIX: """\
## Supporting Documents

- Equipment quotes from two vendors
- Letter of intent from a fourth cafe account
- Lease amendment allowing increased gas service""",
}

CHAT_MESSAGE = "How can I improve my market analysis?"

PROPOSAL_CONTENT = """\
## Local Demand

Pittsburgh's specialty coffee scene has expanded steadily, with *third-wave* cafes opening across the East End. Most still source beans from out-of-state roasters, paying freight and losing freshness.

## Competition

- Two established roasters serve the premium segment at $16 to $19 per bag
- Grocery brands own the value shelf below $11
- Nobody else offers roast-to-door delivery inside 48 hours

## Why We Win

Freshness is measurable: our average days-from-roast at delivery is two, against nine for out-of-state suppliers. The city grant lets us hold that edge while doubling capacity."""

CHAT_REPLY = (
    "Your market analysis already names the competitive lanes. The strongest "
    "improvement is quantifying them: pricing bands and a freshness metric make "
    "the grant case concrete. Here is a revision that does both.\n\n"
    "<<<PROPOSAL\n"
    "SECTION: market_analysis\n"
    "GOALS: g1\n"
    "RATIONALE: quantifies the competitive gap the grant application leans on\n"
    "CONTENT:\n"
    f"{PROPOSAL_CONTENT}\n"
    ">>>\n"
)

PITCH_REPLY = """\
- How much of the $40,000 grant would go to equipment versus working capital?
- What monthly revenue do you project once the second roaster is running?
- Who are the two established competitors and how do you win accounts from them?
- What happens to the 48-hour delivery promise if wholesale demand doubles?
- Why is the tasting room strategic rather than a distraction?
- What milestones would you report back to the city if funded?
"""


def canned_response(content):
    return ProviderResponse(
        content=content,
        finish_reason="stop",
        usage=Usage(prompt_tokens=1, completion_tokens=1),
        provider_model="mock-fixture",
    )


def author_static_inputs():
    if LLM_DIR.exists():
        shutil.rmtree(LLM_DIR)
    LLM_DIR.mkdir(parents=True)
    (FIXTURE / "coffee_site.html").write_text(SITE_HTML, encoding="utf-8")
    (FIXTURE / "pages.json").write_text(
        json.dumps({SITE_URL: "coffee_site.html"}, indent=2) + "\n", encoding="utf-8"
    )
    (FIXTURE / "jose_edit.webm").write_bytes(AUDIO_BYTES)


async def author_llm_fixtures():
    """Record every provider reply the scenario will replay, and mirror the
    resulting document states locally so request keys line up exactly."""
    gateway = Gateway(GatewayConfig(mode="mock", fixture_dir=LLM_DIR))
    clock = FixedClock()

    page = await fetch_and_strip(SITE_URL, mode="fixture", fixture_dir=FIXTURE, clock=clock)
    assert "small-batch coffee roaster" in page.text, "site snapshot lost its anchor phrase"
    assert not page.truncated

    write_fixture(LLM_DIR, extraction_request(gateway, page.text), canned_response(EXTRACTION_REPLY))
    context = await context_from_page(page, gateway)
    assert context.business_name == "Fuego Coffee"

    for sid in CANONICAL_ORDER:
        bundle = assemble_section_prompt(sid, context, GOALS)
        write_fixture(
            LLM_DIR, section_request(gateway, bundle), canned_response(SECTION_BODIES[sid])
        )

    draft = await generate_draft(
        context, GOALS, gateway, document_id=DOCUMENT_ID, owner=OWNER, clock=clock
    )
    assert all(s.completeness > 0 for s in draft.sections)

    # the scenario's manual edit: fix the founding year by voice instruction
    company_md = markup.render(draft.section(SectionId.COMPANY_DESCRIPTION).content)
    assert "2021" in company_md
    edited = doc1 = draft.with_section_replaced(
        SectionId.COMPANY_DESCRIPTION,
        markup.parse(company_md.replace("2021", "2022")),
        author="user",
        timestamp=clock.now(),
    )

    conversation = [ChatTurn(0, "user", CHAT_MESSAGE, SectionId.MARKET_ANALYSIS)]
    chat_request = propose_edit_request(
        gateway, CHAT_MESSAGE, conversation, doc1, SectionId.MARKET_ANALYSIS, stream=True
    )
    write_fixture(LLM_DIR, chat_request, canned_response(CHAT_REPLY))
    reply_text, proposals = await propose_edit(CHAT_MESSAGE, conversation, doc1, gateway)
    assert len(proposals) == 1 and proposals[0].goal_ids == ("g1",)

    conv2 = conversation + [ChatTurn(1, "assistant", reply_text, proposals[0].target_section)]
    exploit = current_topic(conv2, doc1)
    explore = explore_target(conv2, doc1)
    suggest_reply = (
        "EXPLOIT: Want to add a pricing comparison against the two established roasters?\n"
        f"EXPLORE: Ready to strengthen your {explore.display_name} section next?"
    )
    write_fixture(
        LLM_DIR,
        suggest_prompts_request(gateway, exploit, explore, doc1.goals),
        canned_response(suggest_reply),
    )

    doc2 = apply_edit(doc1, proposals[0], timestamp=clock.now())

    write_fixture(LLM_DIR, pitch_request(gateway, doc2, doc2.goals[0]), canned_response(PITCH_REPLY))

    transcription = ProviderRequest(
        route=Route.transcription, audio=AUDIO_BYTES, media_type="audio/webm"
    )
    write_fixture(LLM_DIR, transcription, canned_response(TRANSCRIPT_TEXT))

    return draft, edited, doc2, proposals[0]


def freeze_pipeline_goldens(draft):
    (GOLDEN / "drafts").mkdir(parents=True, exist_ok=True)
    (GOLDEN / "export").mkdir(parents=True, exist_ok=True)
    draft_bytes = draft.to_interchange()
    (GOLDEN / "drafts" / "coffee.json").write_bytes(draft_bytes)
    (FIXTURE / "draft_coffee.json").write_bytes(draft_bytes)
    (GOLDEN / "export" / "coffee.md").write_bytes(export.export_markdown(draft))
    (GOLDEN / "export" / "coffee.html").write_bytes(export.export_html(draft))


def run_scenario(tmp_data_dir, mirror_draft, mirror_final, mirror_proposal):
    """Drive the real HTTP service through the full session and freeze its
    final export. Every step is cross-checked against the library mirror."""
    settings = load_settings(
        None,
        environ={
            "DATA_DIR": str(tmp_data_dir),
            "AUTH_TOKEN": AUTH_TOKEN,
            "LLM_MODE": "mock",
            "LLM_FIXTURE_DIR": str(LLM_DIR),
            "INGEST_MODE": "fixture",
            "PAGE_FIXTURE_DIR": str(FIXTURE),
        },
    )
    client = TestClient(create_app(settings))
    headers = {"Authorization": f"Bearer {AUTH_TOKEN}"}

    onboard = client.post(
        "/onboard/website",
        json={
            "url": SITE_URL,
            "goals": [{"label": "Apply for the city grant", "detail": "due in March"}],
        },
        headers=headers,
    )
    assert onboard.status_code == 202, onboard.text
    assert onboard.text.count("event: section_done") == 9, onboard.text
    assert "event: draft_ready" in onboard.text

    draft_raw = client.get(f"/plans/{DOCUMENT_ID}", headers=headers).content
    assert draft_raw == mirror_draft.to_interchange(), "service draft diverged from pipeline"

    transcript = client.post(
        "/transcribe",
        files={"file": ("jose_edit.webm", AUDIO_BYTES, "audio/webm")},
        headers=headers,
    )
    assert transcript.json() == {"text": TRANSCRIPT_TEXT}

    draft_doc = PlanDocument.from_interchange(draft_raw)
    company_md = markup.render(draft_doc.section(SectionId.COMPANY_DESCRIPTION).content)
    from bizplan import richtext

    edit = client.post(
        f"/plans/{DOCUMENT_ID}/sections/company_description/edit",
        json={"replacement": richtext.to_wire(markup.parse(company_md.replace("2021", "2022")))},
        headers=headers,
    )
    assert edit.status_code == 200, edit.text
    assert PlanDocument.from_interchange(edit.content).head == 1

    chat = client.post(
        f"/plans/{DOCUMENT_ID}/chat", json={"message": CHAT_MESSAGE}, headers=headers
    )
    assert chat.status_code == 200
    final_line = [l for l in chat.text.splitlines() if l.startswith("data: ")][-1]
    final = json.loads(final_line[len("data: "):])
    assert len(final["proposals"]) == 1
    assert len(final["suggestions"]) == 2
    assert final["proposals"][0]["proposal_id"] == mirror_proposal.proposal_id
    assert final["suggestions"][0]["text"].startswith("Want to add a pricing comparison")

    applied = client.post(
        f"/plans/{DOCUMENT_ID}/apply",
        json={"proposal_id": mirror_proposal.proposal_id},
        headers=headers,
    )
    assert applied.status_code == 200, applied.text
    assert applied.content == mirror_final.to_interchange(), "apply diverged from mirror"

    pitch = client.post(
        f"/plans/{DOCUMENT_ID}/pitch-prep", json={"goal_id": "g1"}, headers=headers
    )
    assert pitch.status_code == 200, pitch.text
    questions = pitch.json()["questions"]
    assert 5 <= len(questions) <= 8
    assert any("grant" in q for q in questions)

    exported = client.get(f"/plans/{DOCUMENT_ID}/export?format=md", headers=headers)
    assert exported.status_code == 200
    assert exported.content == export.export_markdown(mirror_final)
    (GOLDEN / "export" / "coffee_scenario.md").write_bytes(exported.content)


def main():
    import tempfile

    author_static_inputs()
    draft, edited, final, proposal = asyncio.new_event_loop().run_until_complete(
        author_llm_fixtures()
    )
    freeze_pipeline_goldens(draft)
    with tempfile.TemporaryDirectory() as tmp:
        run_scenario(Path(tmp) / "data", draft, final, proposal)
    fixture_count = len(list(LLM_DIR.iterdir()))
    print(f"ok: {fixture_count} provider fixtures, goldens frozen under {GOLDEN}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

import json

import pytest

from bizplan import export, ingestion, markup, richtext
from bizplan.clock import FixedClock
from bizplan.gateway import ProviderRequest, ProviderResponse, Route, Usage, write_fixture
from bizplan.generator import assemble_section_prompt, section_request
from bizplan.model import Goal, PlanDocument, new_document
from bizplan.pitch import pitch_request
from bizplan.richtext import RichText
from bizplan.sections import CANONICAL_ORDER, SectionId
from bizplan.service.storage import Storage
from bizplan.suggestions import ChatTurn, propose_edit_request, tag_focus_section

from .conftest import canned, run
from .service_helpers import (
    AUTH_TOKEN,
    EXTRACTION_REPLY,
    SITE_URL,
    ServiceEnv,
    parse_sse,
)

GOALS_JSON = [{"label": "Apply for the city grant", "detail": "due in March"}]


@pytest.fixture
def env(tmp_path):
    return ServiceEnv(tmp_path)


def seed_onboarding(env):
    """Record every fixture the onboarding pipeline will request."""
    page = run(
        ingestion.fetch_and_strip(
            SITE_URL, mode="fixture", fixture_dir=env.page_dir, clock=FixedClock()
        )
    )
    canned(env.gateway, ingestion.extraction_request(env.gateway, page.text), EXTRACTION_REPLY)
    context = run(ingestion.context_from_page(page, env.gateway))
    goals = [Goal(id="g1", label="Apply for the city grant", detail="due in March")]
    for sid in CANONICAL_ORDER:
        bundle = assemble_section_prompt(sid, context, goals)
        canned(
            env.gateway,
            section_request(env.gateway, bundle),
            f"{sid.display_name} draft for Fuego Coffee.\n\nSupporting detail paragraph.",
        )
    return context, goals


def onboard(env):
    seed_onboarding(env)
    response = env.client.post(
        "/onboard/website",
        json={"url": SITE_URL, "goals": GOALS_JSON},
        headers=env.headers(),
    )
    assert response.status_code == 202
    events = parse_sse(response.text)
    assert events[-1][0] == "draft_ready"
    return events[-1][1]["document_id"]


# Auth ---------------------------------------------------------------------------

def test_missing_or_bad_token_is_401(env):
    assert env.client.get("/plans/doc-000001").status_code == 401
    assert (
        env.client.get("/plans/doc-000001", headers=env.headers("wrong")).status_code == 401
    )
    body = env.client.get("/plans/doc-000001", headers=env.headers("wrong")).json()
    assert body == {"error": "unauthenticated"}


def test_token_mint_and_rotation(env):
    first = env.client.post("/auth/token", headers=env.headers()).json()
    assert first["account_id"] == "acct-000001"
    token_a = first["token"]
    assert token_a != AUTH_TOKEN
    # minted token authenticates
    second = env.client.post("/auth/token", headers=env.headers(token_a)).json()
    token_b = second["token"]
    # rotation invalidates the previous minted token; bootstrap stays valid
    r = env.client.post("/auth/token", headers=env.headers(token_a))
    assert r.status_code == 401
    assert env.client.post("/auth/token", headers=env.headers(token_b)).status_code == 200
    assert env.client.post("/auth/token", headers=env.headers()).status_code == 200


def test_token_hash_never_leaks(env):
    env.client.post("/auth/token", headers=env.headers())
    accounts = json.loads((env.data_dir / "accounts.json").read_text())
    stored_hash = accounts["accounts"][0]["api_token_hash"]
    response = env.client.post("/auth/token", headers=env.headers())
    assert stored_hash not in response.text


# Onboarding ----------------------------------------------------------------------

def test_onboard_website_streams_nine_sections_then_draft(env):
    seed_onboarding(env)
    response = env.client.post(
        "/onboard/website",
        json={"url": SITE_URL, "goals": GOALS_JSON},
        headers=env.headers(),
    )
    assert response.status_code == 202
    assert response.headers["content-type"].startswith("text/event-stream")
    events = parse_sse(response.text)
    names = [name for name, _ in events]
    assert names.count("section_done") == 9
    assert names[-1] == "draft_ready"
    done = {payload["section_id"] for name, payload in events if name == "section_done"}
    assert done == {sid.value for sid in CANONICAL_ORDER}
    document_id = events[-1][1]["document_id"]
    assert document_id == "doc-000001"

    doc_raw = env.client.get(f"/plans/{document_id}", headers=env.headers())
    assert doc_raw.status_code == 200
    doc = PlanDocument.from_interchange(doc_raw.content)
    assert doc.head == 0
    assert all(s.completeness > 0 for s in doc.sections)
    assert doc.goals[0].id == "g1"
    assert doc.context.business_name == "Fuego Coffee"


def test_onboard_without_fixtures_emits_error_and_persists_nothing(env):
    response = env.client.post(
        "/onboard/website",
        json={"url": SITE_URL, "goals": []},
        headers=env.headers(),
    )
    assert response.status_code == 202
    events = parse_sse(response.text)
    assert events[-1][0] == "error"
    assert events[-1][1]["code"] in ("generation_failed", "provider_failure")
    assert env.client.get("/plans/doc-000001", headers=env.headers()).status_code == 404


def test_onboard_rejects_bad_url(env):
    response = env.client.post(
        "/onboard/website", json={"url": "ftp://x", "goals": []}, headers=env.headers()
    )
    assert response.status_code == 422


def test_onboard_chat_transcript(env):
    transcript = [
        {"role": "assistant", "text": "Tell me about your business."},
        {"role": "user", "text": "We roast coffee in Pittsburgh."},
    ]
    pairs = [(t["role"], t["text"]) for t in transcript]
    canned(
        env.gateway,
        ingestion.chat_extraction_request(env.gateway, pairs),
        EXTRACTION_REPLY,
    )
    context = run(
        ingestion.context_from_chat(pairs, env.gateway, conversation_id="onboard-doc-000001")
    )
    for sid in CANONICAL_ORDER:
        bundle = assemble_section_prompt(sid, context, [])
        canned(env.gateway, section_request(env.gateway, bundle), f"{sid.value} body text.")
    response = env.client.post(
        "/onboard/chat", json={"transcript": transcript, "goals": []}, headers=env.headers()
    )
    events = parse_sse(response.text)
    assert events[-1][0] == "draft_ready"
    doc = PlanDocument.from_interchange(
        env.client.get("/plans/doc-000001", headers=env.headers()).content
    )
    assert doc.context.source.kind == "chat"
    assert doc.context.source.conversation_id == "onboard-doc-000001"


def test_onboard_chat_requires_user_turn(env):
    response = env.client.post(
        "/onboard/chat",
        json={"transcript": [{"role": "assistant", "text": "hi"}], "goals": []},
        headers=env.headers(),
    )
    assert response.status_code == 422


# Document access -----------------------------------------------------------------

def test_unknown_document_404(env):
    response = env.client.get("/plans/doc-424242", headers=env.headers())
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_document"


def test_foreign_document_403(env):
    from .test_suggestions import make_doc

    foreign = new_document(
        make_doc().context,
        [],
        {sid: RichText() for sid in CANONICAL_ORDER},
        document_id="doc-000077",
        owner="acct-000999",
        timestamp=FixedClock().now(),
    )
    storage = Storage(env.data_dir)
    for revision, payload in zip(*foreign.history()):
        storage.append_document_event(foreign.document_id, revision, payload)
    response = env.client.get("/plans/doc-000077", headers=env.headers())
    assert response.status_code == 403
    assert response.json() == {"error": "not_owner"}


def test_get_plan_returns_interchange_bytes(env):
    document_id = onboard(env)
    raw = env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    doc = PlanDocument.from_interchange(raw)
    assert doc.to_interchange() == raw  # byte-stable round trip


# Export ---------------------------------------------------------------------------

def test_export_formats_and_bytes(env):
    document_id = onboard(env)
    doc = PlanDocument.from_interchange(
        env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    )
    md = env.client.get(f"/plans/{document_id}/export?format=md", headers=env.headers())
    assert md.status_code == 200
    assert md.headers["content-type"].startswith("text/markdown")
    assert md.content == export.export_markdown(doc)
    html = env.client.get(f"/plans/{document_id}/export?format=html", headers=env.headers())
    assert html.headers["content-type"].startswith("text/html")
    assert html.content == export.export_html(doc)
    bad = env.client.get(f"/plans/{document_id}/export?format=docx", headers=env.headers())
    assert bad.status_code == 422


# Chat -----------------------------------------------------------------------------

CHAT_REPLY = (
    "You could sharpen the competitive picture.\n\n"
    "<<<PROPOSAL\n"
    "SECTION: market_analysis\n"
    "GOALS: g1\n"
    "RATIONALE: strengthens the grant application\n"
    "CONTENT:\n"
    "Pittsburgh has a growing specialty coffee scene.\n\n"
    "Direct rivals remain generalists.\n"
    ">>>\n"
)


def seed_chat(env, document_id, message, reply=CHAT_REPLY):
    doc = PlanDocument.from_interchange(
        env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    )
    conversation_id = f"conv-{document_id}"
    existing = Storage(env.data_dir).load_turns(conversation_id)
    focus = tag_focus_section(message) or SectionId.EXECUTIVE_SUMMARY
    conversation = existing + [ChatTurn(len(existing), "user", message, focus)]
    request = propose_edit_request(
        env.gateway, message, conversation, doc, focus, stream=True
    )
    canned(env.gateway, request, reply)
    return doc


def test_chat_streams_deltas_then_final_with_proposal(env):
    document_id = onboard(env)
    message = "How can I improve my market analysis?"
    seed_chat(env, document_id, message)
    response = env.client.post(
        f"/plans/{document_id}/chat", json={"message": message}, headers=env.headers()
    )
    assert response.status_code == 200
    events = parse_sse(response.text)
    names = [name for name, _ in events]
    assert names[-1] == "final"
    assert names.count("final") == 1
    deltas = "".join(p["text"] for name, p in events if name == "delta")
    assert "sharpen the competitive picture" in deltas
    assert "<<<PROPOSAL" not in deltas
    final = events[-1][1]
    assert len(final["proposals"]) == 1
    assert len(final["suggestions"]) == 2
    proposal = final["proposals"][0]
    assert proposal["target_section"] == "market_analysis"
    assert proposal["base_revision"] == 0
    kinds = [s["kind"] for s in final["suggestions"]]
    assert kinds == ["exploitation", "exploration"]


def test_chat_without_fixture_ends_with_error_then_final_two_suggestions(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/chat",
        json={"message": "tell me something nice"},
        headers=env.headers(),
    )
    events = parse_sse(response.text)
    names = [name for name, _ in events]
    assert "error" in names
    assert names[-1] == "final"
    final = events[-1][1]
    assert final["proposals"] == []
    assert len(final["suggestions"]) == 2


def test_chat_persists_turns(env):
    document_id = onboard(env)
    env.client.post(
        f"/plans/{document_id}/chat",
        json={"message": "thoughts on funding?"},
        headers=env.headers(),
    )
    turns = Storage(env.data_dir).load_turns(f"conv-{document_id}")
    assert len(turns) == 2
    assert turns[0].role == "user"
    assert turns[0].focus_section == SectionId.FUNDING_REQUEST
    assert turns[1].role == "assistant"


def test_chat_rejects_empty_message(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/chat", json={"message": "  "}, headers=env.headers()
    )
    assert response.status_code == 422


# Apply ----------------------------------------------------------------------------

def apply_flow(env):
    document_id = onboard(env)
    message = "How can I improve my market analysis?"
    seed_chat(env, document_id, message)
    response = env.client.post(
        f"/plans/{document_id}/chat", json={"message": message}, headers=env.headers()
    )
    final = parse_sse(response.text)[-1][1]
    return document_id, final["proposals"][0]


def test_apply_proposal_advances_head(env):
    document_id, proposal = apply_flow(env)
    response = env.client.post(
        f"/plans/{document_id}/apply",
        json={"proposal_id": proposal["proposal_id"]},
        headers=env.headers(),
    )
    assert response.status_code == 200
    doc = PlanDocument.from_interchange(response.content)
    assert doc.head == 1
    assert doc.revisions[-1].change.kind == "section_replace"
    assert doc.revisions[-1].author == "assistant"
    section = doc.section(SectionId.MARKET_ANALYSIS)
    assert "specialty coffee scene" in markup.render(section.content)


def test_apply_stale_proposal_409_with_head(env):
    document_id, proposal = apply_flow(env)
    first = env.client.post(
        f"/plans/{document_id}/apply",
        json={"proposal_id": proposal["proposal_id"]},
        headers=env.headers(),
    )
    assert first.status_code == 200
    again = env.client.post(
        f"/plans/{document_id}/apply",
        json={"proposal_id": proposal["proposal_id"]},
        headers=env.headers(),
    )
    assert again.status_code == 409
    assert again.json() == {"error": "stale_proposal", "head": 1}


def test_apply_unknown_proposal_404(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/apply",
        json={"proposal_id": "p-doesnotexist"},
        headers=env.headers(),
    )
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_proposal"


def test_proposals_do_not_survive_restart(env):
    document_id, proposal = apply_flow(env)
    env.restart()
    response = env.client.post(
        f"/plans/{document_id}/apply",
        json={"proposal_id": proposal["proposal_id"]},
        headers=env.headers(),
    )
    assert response.status_code == 404


# Manual edits -----------------------------------------------------------------------

def test_manual_edit_replaces_section(env):
    document_id = onboard(env)
    replacement = richtext.to_wire(markup.parse("Fully rewritten body.\n\nTwo paragraphs."))
    response = env.client.post(
        f"/plans/{document_id}/sections/executive_summary/edit",
        json={"replacement": replacement},
        headers=env.headers(),
    )
    assert response.status_code == 200
    doc = PlanDocument.from_interchange(response.content)
    assert doc.head == 1
    assert doc.revisions[-1].change.kind == "section_replace"
    assert doc.revisions[-1].author == "user"


def test_manual_edit_detects_style_only(env):
    document_id = onboard(env)
    doc = PlanDocument.from_interchange(
        env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    )
    current = doc.section(SectionId.EXECUTIVE_SUMMARY).content
    bolded = richtext.RichText(
        blocks=tuple(
            type(b)(
                **{
                    **{f: getattr(b, f) for f in b.__dataclass_fields__},
                    "inlines": tuple(
                        richtext.Inline(text=r.text, marks=("bold",)) for r in b.inlines
                    ),
                }
            )
            if hasattr(b, "inlines")
            else b
            for b in current.blocks
        )
    )
    response = env.client.post(
        f"/plans/{document_id}/sections/executive_summary/edit",
        json={"replacement": richtext.to_wire(bolded)},
        headers=env.headers(),
    )
    doc = PlanDocument.from_interchange(response.content)
    assert doc.revisions[-1].change.kind == "style_only"


def test_manual_edit_explicit_kind_and_validation(env):
    document_id = onboard(env)
    replacement = richtext.to_wire(markup.parse("Inserted sentence."))
    ok = env.client.post(
        f"/plans/{document_id}/sections/appendix/edit",
        json={"replacement": replacement, "change_kind": "inline_insert"},
        headers=env.headers(),
    )
    assert ok.status_code == 200
    doc = PlanDocument.from_interchange(ok.content)
    assert doc.revisions[-1].change.kind == "inline_insert"
    bad = env.client.post(
        f"/plans/{document_id}/sections/appendix/edit",
        json={"replacement": replacement, "change_kind": "merge_all"},
        headers=env.headers(),
    )
    assert bad.status_code == 422


def test_manual_edit_unknown_section_404(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/sections/way_offbase/edit",
        json={"replacement": {"blocks": []}},
        headers=env.headers(),
    )
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_section"


def test_manual_edit_garbage_richtext_422(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/sections/appendix/edit",
        json={"replacement": {"blocks": [{"type": "video"}]}},
        headers=env.headers(),
    )
    assert response.status_code == 422


# Inline generation -------------------------------------------------------------------

def test_inline_endpoint(env):
    from bizplan import suggestions as sg

    document_id = onboard(env)
    doc = PlanDocument.from_interchange(
        env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    )
    request = sg.InlineRequest(SectionId.MARKET_ANALYSIS, "competitor detail", 1)
    provider_req = env.gateway.build_request(
        Route.suggestions, sg.inline_request_messages(request, doc)
    )
    canned(env.gateway, provider_req, "Option one.\n---\nOption two.")
    response = env.client.post(
        f"/plans/{document_id}/inline",
        json={"section_id": "market_analysis", "criteria": "competitor detail", "cursor_block": 1},
        headers=env.headers(),
    )
    assert response.status_code == 200
    body = response.json()
    assert len(body["candidates"]) == 2
    assert len(body["exemplars"]) == 3
    assert all(e["section_id"] == "market_analysis" for e in body["exemplars"])


def test_inline_without_fixture_502(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/inline",
        json={"section_id": "appendix", "criteria": "anything"},
        headers=env.headers(),
    )
    assert response.status_code == 502
    assert response.json()["error"] == "provider_failure"


# Pitch prep ---------------------------------------------------------------------------

def test_pitch_prep_endpoint(env):
    document_id = onboard(env)
    doc = PlanDocument.from_interchange(
        env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    )
    req = pitch_request(env.gateway, doc, doc.goals[0])
    canned(env.gateway, req, "\n".join(f"- Question {i}?" for i in range(5)))
    response = env.client.post(
        f"/plans/{document_id}/pitch-prep", json={"goal_id": "g1"}, headers=env.headers()
    )
    assert response.status_code == 200
    body = response.json()
    assert body["document_id"] == document_id
    assert body["goal_id"] == "g1"
    assert 5 <= len(body["questions"]) <= 8
    assert body["head_at_generation"] == 0


def test_pitch_prep_unknown_goal_404(env):
    document_id = onboard(env)
    response = env.client.post(
        f"/plans/{document_id}/pitch-prep", json={"goal_id": "g77"}, headers=env.headers()
    )
    assert response.status_code == 404
    assert response.json()["error"] == "unknown_goal"


# Reference data -----------------------------------------------------------------------

def test_experts_endpoint(env):
    everyone = env.client.get("/experts").json()["experts"]
    assert len(everyone) >= 3
    funding = env.client.get("/experts?focus=funding_request").json()["experts"]
    assert funding
    assert all("funding_request" in e["focus_areas"] for e in funding)
    nobody = env.client.get("/experts?focus=appendix").json()["experts"]
    assert nobody == []
    assert env.client.get("/experts?focus=bogus").status_code == 422


def test_tooltips_and_exemplars_endpoints(env):
    tips = env.client.get("/sections/market_analysis/tooltips").json()
    assert tips["section_id"] == "market_analysis"
    assert 3 <= len(tips["questions"]) <= 5
    exemplars = env.client.get("/sections/appendix/exemplars").json()
    assert len(exemplars["exemplars"]) == 1
    assert env.client.get("/sections/nope/tooltips").status_code == 404


# Transcription ------------------------------------------------------------------------

def test_transcribe_endpoint(env):
    audio = b"\x1aE\xdf\xa3fake-webm-bytes"
    request = ProviderRequest(route=Route.transcription, audio=audio, media_type="audio/webm")
    write_fixture(
        env.llm_dir,
        request,
        ProviderResponse("change the founding year to twenty twenty-two", "stop", Usage(), "m"),
    )
    response = env.client.post(
        "/transcribe",
        files={"file": ("note.webm", audio, "audio/webm")},
        headers=env.headers(),
    )
    assert response.status_code == 200
    assert response.json() == {"text": "change the founding year to twenty twenty-two"}


def test_transcribe_unsupported_media_422(env):
    response = env.client.post(
        "/transcribe",
        files={"file": ("clip.mov", b"xxxx", "video/quicktime")},
        headers=env.headers(),
    )
    assert response.status_code == 422


def test_transcribe_requires_auth(env):
    response = env.client.post(
        "/transcribe", files={"file": ("note.webm", b"x", "audio/webm")}
    )
    assert response.status_code == 401


# Persistence across restarts -------------------------------------------------------

def test_document_survives_restart_with_identical_bytes(env):
    document_id = onboard(env)
    before = env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    env.restart()
    after = env.client.get(f"/plans/{document_id}", headers=env.headers()).content
    assert after == before


def test_corrupt_document_isolated_after_restart(env):
    document_id = onboard(env)
    # tamper with the stored event log
    path = env.data_dir / "documents" / f"{document_id}.events"
    lines = path.read_text().splitlines()
    record = json.loads(lines[0])
    record["revision"]["author"] = "intruder"
    lines[0] = json.dumps(record, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    env.restart()
    response = env.client.get(f"/plans/{document_id}", headers=env.headers())
    assert response.status_code == 500
    assert response.json()["error"] == "storage_corrupt"
    # other endpoints stay healthy
    assert env.client.get("/experts").status_code == 200

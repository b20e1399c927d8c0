import pytest
from hypothesis import given, strategies as st

from bizplan import pitch
from bizplan.clock import FixedClock
from bizplan.gateway import Message, Route
from bizplan.pitch import (
    MAX_QUESTIONS,
    MIN_QUESTIONS,
    PITCH_REFORMAT_INSTRUCTION,
    QuestionParseFailed,
    UnknownGoal,
    list_experts,
    parse_questions,
    pitch_request,
    prepare_pitch,
)
from bizplan.sections import SectionId

from .conftest import canned, run
from .test_suggestions import make_doc


def test_parse_questions_strips_markers():
    content = (
        "- What is your runway?\n"
        "* How big is the market\n"
        "1. Who are your competitors?\n"
        "2) What traction do you have?\n"
        "Not a question line\n"
        "Is this standalone line kept?\n"
    )
    questions = parse_questions(content)
    assert questions == [
        "What is your runway?",
        "How big is the market?",
        "Who are your competitors?",
        "What traction do you have?",
        "Is this standalone line kept?",
    ]


def test_parse_questions_empty_on_prose():
    assert parse_questions("I am unable to help with that.") == []


@given(st.integers(min_value=0, max_value=20))
def test_question_count_always_clamped(n):
    """0 parsed questions fail honestly; 1..20 clamp into [5, 8]."""
    doc = make_doc()
    questions = [f"- Question number {i}?" for i in range(n)]
    parsed = parse_questions("\n".join(questions))
    assert len(parsed) == n
    padded = pitch._pad_questions(parsed[:MAX_QUESTIONS], doc)
    assert MIN_QUESTIONS <= len(padded) <= MAX_QUESTIONS


def test_prepare_pitch_happy_path(gateway):
    doc = make_doc({SectionId.EXECUTIVE_SUMMARY: 700})
    goal = doc.goals[0]
    req = pitch_request(gateway, doc, goal)
    canned(
        gateway,
        req,
        "\n".join(f"- Question {i}?" for i in range(6)),
    )
    prep = run(prepare_pitch(doc, goal.id, gateway, clock=FixedClock()))
    assert prep.document_id == doc.document_id
    assert prep.goal_id == goal.id
    assert len(prep.questions) == 6
    assert prep.head_at_generation == doc.head
    wire = prep.to_wire()
    assert wire["generated_at"] == "2025-01-01T00:00:00Z"


def test_prepare_pitch_pads_short_lists_by_least_complete(gateway):
    counts = {sid: 650 for sid in SectionId}
    counts[SectionId.APPENDIX] = 0
    counts[SectionId.FUNDING_REQUEST] = 30
    doc = make_doc(counts)
    goal = doc.goals[0]
    req = pitch_request(gateway, doc, goal)
    canned(gateway, req, "- Only question?\n- Second question?")
    prep = run(prepare_pitch(doc, goal.id, gateway, clock=FixedClock()))
    assert len(prep.questions) == MIN_QUESTIONS
    assert prep.questions[2] == "What is the weakest part of my Appendix section?"
    assert prep.questions[3] == "What is the weakest part of my Funding Request section?"


def test_prepare_pitch_clamps_long_lists(gateway):
    doc = make_doc()
    goal = doc.goals[0]
    req = pitch_request(gateway, doc, goal)
    canned(gateway, req, "\n".join(f"- Question {i}?" for i in range(15)))
    prep = run(prepare_pitch(doc, goal.id, gateway, clock=FixedClock()))
    assert len(prep.questions) == MAX_QUESTIONS


def test_prepare_pitch_unknown_goal(gateway):
    doc = make_doc()
    with pytest.raises(UnknownGoal):
        run(prepare_pitch(doc, "g999", gateway, clock=FixedClock()))


def test_prepare_pitch_retries_then_fails_honestly(gateway):
    doc = make_doc()
    goal = doc.goals[0]
    req = pitch_request(gateway, doc, goal)
    canned(gateway, req, "no questions in this reply")
    retry = gateway.build_request(
        Route.pitch_prep,
        req.messages
        + (
            Message("assistant", "no questions in this reply"),
            Message("user", PITCH_REFORMAT_INSTRUCTION),
        ),
    )
    canned(gateway, retry, "still refusing to ask anything")
    with pytest.raises(QuestionParseFailed):
        run(prepare_pitch(doc, goal.id, gateway, clock=FixedClock()))


def test_prepare_pitch_retry_can_recover(gateway):
    doc = make_doc()
    goal = doc.goals[0]
    req = pitch_request(gateway, doc, goal)
    canned(gateway, req, "prose only")
    retry = gateway.build_request(
        Route.pitch_prep,
        req.messages
        + (Message("assistant", "prose only"), Message("user", PITCH_REFORMAT_INSTRUCTION)),
    )
    canned(gateway, retry, "- Recovered question?")
    prep = run(prepare_pitch(doc, goal.id, gateway, clock=FixedClock()))
    assert "Recovered question?" in prep.questions


def test_pitch_request_embeds_goal_and_plan(gateway):
    doc = make_doc({SectionId.EXECUTIVE_SUMMARY: 100})
    req = pitch_request(gateway, doc, doc.goals[0])
    assert req.route == Route.pitch_prep
    body = req.messages[1].content
    assert "apply for city grant" in body
    assert "# Executive Summary" in body


# Expert directory ------------------------------------------------------------

def test_list_experts_all():
    experts = list_experts()
    assert len(experts) >= 3
    assert all(e.focus_areas for e in experts)


def test_list_experts_filter_by_focus():
    funding = list_experts(SectionId.FUNDING_REQUEST)
    assert funding
    assert all(SectionId.FUNDING_REQUEST in e.focus_areas for e in funding)


def test_list_experts_empty_filter_result():
    # the directory deliberately has nobody covering the appendix
    assert list_experts(SectionId.APPENDIX) == ()


def test_expert_wire_shape():
    wire = list_experts()[0].to_wire()
    assert set(wire) == {"expert_id", "name", "focus_areas", "contact_url"}

from bizplan import corpus
from bizplan.sections import CANONICAL_ORDER, SectionId


def test_every_section_has_exemplars():
    for sid in CANONICAL_ORDER:
        items = corpus.exemplars_for(sid)
        assert len(items) >= 1, sid
        for ex in items:
            assert ex.section_id == sid
            assert ex.title
            assert ex.body.strip()
            assert ex.source_url.startswith("https://")


def test_exemplar_order_is_stable():
    first = corpus.exemplars_for(SectionId.MARKET_ANALYSIS)
    second = corpus.exemplars_for(SectionId.MARKET_ANALYSIS)
    assert [e.exemplar_id for e in first] == [e.exemplar_id for e in second]


def test_appendix_has_exactly_one_exemplar():
    assert len(corpus.exemplars_for(SectionId.APPENDIX)) == 1


def test_tooltip_questions_shape():
    for sid in CANONICAL_ORDER:
        questions = corpus.tooltip_questions(sid)
        assert 3 <= len(questions) <= 5, sid
        assert all(q.endswith("?") for q in questions)
    twice = corpus.tooltip_questions(SectionId.MARKET_ANALYSIS)
    assert twice == corpus.tooltip_questions(SectionId.MARKET_ANALYSIS)


def test_experts_raw_nonempty_with_focus_areas():
    raw = corpus.experts_raw()
    assert raw
    for item in raw:
        assert item["expert_id"]
        assert item["name"]
        assert item["focus_areas"]


def test_exemplar_wire_shape():
    ex = corpus.exemplars_for(SectionId.EXECUTIVE_SUMMARY)[0]
    wire = ex.to_wire()
    assert set(wire) == {"exemplar_id", "section_id", "title", "body", "source_url"}

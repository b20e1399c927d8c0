from hypothesis import given, settings

from bizplan import export, markup
from bizplan.clock import FixedClock
from bizplan.export import EMPTY_SECTION_PLACEHOLDER, export_html, export_markdown, section_slice
from bizplan.richtext import normalize
from bizplan.sections import CANONICAL_ORDER, SectionId

from .strategies import rich_texts
from .test_suggestions import make_doc


def fill(doc, contents):
    clock = FixedClock()
    for sid, text in contents.items():
        doc = doc.with_section_replaced(
            sid, markup.parse(text), author="user", timestamp=clock.now()
        )
    return doc


def test_export_markdown_shape():
    doc = fill(make_doc(), {SectionId.EXECUTIVE_SUMMARY: "We roast **coffee**."})
    out = export_markdown(doc).decode("utf-8")
    lines = out.splitlines()
    assert lines[0] == "Fuego Coffee"
    assert lines[1].startswith("<!-- document: doc-000001 head: ")
    assert out.endswith("\n")
    heading_lines = [l for l in lines if l.startswith("# ")]
    assert heading_lines == [f"# {sid.display_name}" for sid in CANONICAL_ORDER]


def test_export_markdown_empty_sections_get_placeholder():
    out = export_markdown(make_doc()).decode("utf-8")
    assert out.count(EMPTY_SECTION_PLACEHOLDER) == 9


def test_export_is_deterministic():
    doc = fill(make_doc(), {SectionId.APPENDIX: "Lease terms."})
    assert export_markdown(doc) == export_markdown(doc)


def test_content_headings_are_shifted_down():
    doc = fill(make_doc(), {SectionId.MARKET_ANALYSIS: "# Local\n\nNearby buyers."})
    out = export_markdown(doc).decode("utf-8")
    assert "\n## Local\n" in out
    # only section boundaries sit at level one
    assert [l for l in out.splitlines() if l.startswith("# ")] == [
        f"# {sid.display_name}" for sid in CANONICAL_ORDER
    ]


def test_section_slice_round_trips_content():
    original = "## Rivals\n\nTwo shops nearby.\n\n- cheap\n- slow"
    doc = fill(make_doc(), {SectionId.MARKET_ANALYSIS: original})
    exported = export_markdown(doc)
    sliced = section_slice(exported, SectionId.MARKET_ANALYSIS)
    assert markup.parse(sliced) == doc.section(SectionId.MARKET_ANALYSIS).content


def test_section_slice_empty_section_is_empty_string():
    exported = export_markdown(make_doc())
    assert section_slice(exported, SectionId.APPENDIX) == ""


@settings(max_examples=60, deadline=None)
@given(rich_texts)
def test_export_slice_round_trip_property(content):
    doc = make_doc().with_section_replaced(
        SectionId.FUNDING_REQUEST, content, author="user", timestamp=FixedClock().now()
    )
    exported = export_markdown(doc)
    sliced = section_slice(exported, SectionId.FUNDING_REQUEST)
    assert markup.parse(sliced) == normalize(content)


def test_export_html_has_nine_section_headings():
    doc = fill(make_doc(), {SectionId.EXECUTIVE_SUMMARY: "# Inner\n\nBody text."})
    html = export_html(doc).decode("utf-8")
    assert html.count("<h1>") == 9
    assert "<h2>Inner</h2>" in html
    assert html.startswith("<!DOCTYPE html>")
    assert "Fuego Coffee" in html


def test_export_html_marks_and_placeholder():
    doc = fill(make_doc(), {SectionId.APPENDIX: "*a* **b** ***c***\n\n- item"})
    html = export_html(doc).decode("utf-8")
    assert "<em>a</em>" in html
    assert "<strong>b</strong>" in html
    assert "<strong><em>c</em></strong>" in html
    assert "<li>item</li>" in html
    assert html.count('class="placeholder"') == 8


def test_export_html_escapes_content():
    doc = fill(make_doc(), {SectionId.APPENDIX: "a <script> & b"})
    html = export_html(doc).decode("utf-8")
    assert "<script>" not in html
    assert "&lt;script&gt;" in html
    assert "&amp;" in html

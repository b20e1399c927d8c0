"""Deterministic export of a plan document to Markdown and HTML.

Both formats share one structure: business name, a metadata comment with
the document id and head, then the nine sections in canonical order under
fixed display-name headings. Empty sections carry a placeholder line.

In the Markdown output the section headings own level 1, so headings
inside section content are shifted down one level (#(n) becomes #(n+1)).
:func:`section_slice` inverts the shift, which is what makes
``parse(section_slice(export, sid))`` reproduce the section's normalized
content exactly.
"""

from __future__ import annotations

import html
import re

from . import markup, richtext
from .model import PlanDocument
from .richtext import BulletList, Heading, Inline, RichText
from .sections import CANONICAL_ORDER, SectionId

EMPTY_SECTION_PLACEHOLDER = "_(To be completed.)_"

_CONTENT_HEADING = re.compile(r"^(#{1,3}) ")
_SHIFTED_HEADING = re.compile(r"^(#{2,4}) ")

_HTML_STYLE = (
    "body{font-family:Georgia,serif;max-width:46rem;margin:2rem auto;"
    "padding:0 1rem;line-height:1.5;color:#1a1a1a}"
    "h1{border-bottom:1px solid #999;padding-bottom:.2rem}"
    ".business-name{font-size:1.6rem;font-weight:bold;margin-bottom:2rem}"
    ".placeholder{color:#777;font-style:italic}"
)


def _shift_headings_down(body: str) -> str:
    lines = [
        _CONTENT_HEADING.sub(lambda m: "#" + m.group(1) + " ", line)
        for line in body.split("\n")
    ]
    return "\n".join(lines)


def _unshift_headings(body: str) -> str:
    lines = [
        _SHIFTED_HEADING.sub(lambda m: m.group(1)[1:] + " ", line)
        for line in body.split("\n")
    ]
    return "\n".join(lines)


def _metadata_comment(plan: PlanDocument) -> str:
    return f"<!-- document: {plan.document_id} head: {plan.head} -->"


def export_markdown(plan: PlanDocument) -> bytes:
    chunks = [f"{plan.context.business_name}\n{_metadata_comment(plan)}"]
    for section in plan.sections:
        body = markup.render(section.content)
        body = _shift_headings_down(body) if body else EMPTY_SECTION_PLACEHOLDER
        chunks.append(f"# {section.section_id.display_name}\n\n{body}")
    return ("\n\n".join(chunks) + "\n").encode("utf-8")


def section_slice(exported: bytes, section_id: SectionId) -> str:
    """Extract one section's markup text from export_markdown output,
    undoing the heading shift. The placeholder maps to empty text."""
    text = exported.decode("utf-8")
    lines = text.split("\n")
    open_line = f"# {section_id.display_name}"
    start = None
    # Lines 0..1 are the title and metadata comment; skip them so a
    # pathological business name can never masquerade as a section heading.
    for i, line in enumerate(lines[2:], start=2):
        if line == open_line:
            start = i + 1
            break
    if start is None:
        raise KeyError(f"section {section_id.value} not found in export")
    end = len(lines)
    for j in range(start, len(lines)):
        if lines[j].startswith("# "):
            end = j
            break
    body = "\n".join(lines[start:end]).strip("\n")
    if body == EMPTY_SECTION_PLACEHOLDER:
        return ""
    return _unshift_headings(body)


def _inline_html(run: Inline) -> str:
    out = html.escape(run.text)
    if "italic" in run.marks:
        out = f"<em>{out}</em>"
    if "bold" in run.marks:
        out = f"<strong>{out}</strong>"
    return out


def _inlines_html(inlines: tuple[Inline, ...]) -> str:
    return "".join(_inline_html(r) for r in inlines)


def _content_html(content: RichText) -> list[str]:
    parts = []
    for block in content.blocks:
        if isinstance(block, Heading):
            level = block.level + 1  # section headings own h1
            parts.append(f"<h{level}>{_inlines_html(block.inlines)}</h{level}>")
        elif isinstance(block, BulletList):
            items = "".join(f"<li>{_inlines_html(item)}</li>" for item in block.items)
            parts.append(f"<ul>{items}</ul>")
        else:
            parts.append(f"<p>{_inlines_html(block.inlines)}</p>")
    return parts


def export_html(plan: PlanDocument) -> bytes:
    name = html.escape(plan.context.business_name)
    lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{name}</title>",
        f"<style>{_HTML_STYLE}</style>",
        "</head>",
        "<body>",
        f'<div class="business-name">{name}</div>',
        _metadata_comment(plan),
    ]
    for section in plan.sections:
        lines.append(f"<h1>{html.escape(section.section_id.display_name)}</h1>")
        content = richtext.normalize(section.content)
        if content.is_empty():
            lines.append('<p class="placeholder">(To be completed.)</p>')
        else:
            lines.extend(_content_html(content))
    lines.extend(["</body>", "</html>"])
    return ("\n".join(lines) + "\n").encode("utf-8")

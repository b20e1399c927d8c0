"""Plain-text codec for the constrained rich-text model.

The textual form is a narrow markdown dialect:

* ``#``/``##``/``###`` followed by whitespace opens a heading (levels 1..3);
* lines starting with ``- `` are bullet items, consecutive items form a list;
* anything else is paragraph text; consecutive paragraph lines are joined
  with a single space; blank lines separate blocks;
* ``**bold**`` and ``*italic*`` inline marks, bold delimiters outside italic
  when both apply (``***both***``);
* backslash escapes the next character, so literal ``*``, ``#``, ``-`` and
  ``\\`` are representable anywhere.

:func:`parse` is total: any input string yields a value (malformed
constructs degrade to paragraph text, four or more hashes included), and
the result is always in normal form. :func:`render` normalizes first,
so ``parse(render(x)) == normalize(x)`` for every ``x``.
"""

from __future__ import annotations

import re

from .richtext import (
    Block,
    BulletList,
    Heading,
    Inline,
    Paragraph,
    RichText,
    normalize,
)

_HEADING_RE = re.compile(r"(#{1,3})\s+(.*)$")


def _escape_text(text: str) -> str:
    return text.replace("\\", "\\\\").replace("*", "\\*")


def _mark_stars(marks: tuple[str, ...]) -> int:
    return (2 if "bold" in marks else 0) + (1 if "italic" in marks else 0)


def _render_inlines(inlines: tuple[Inline, ...]) -> str:
    out: list[str] = []
    prev: tuple[str, ...] = ()
    for run in inlines:
        out.append("*" * (_mark_stars(prev) + _mark_stars(run.marks)))
        out.append(_escape_text(run.text))
        prev = run.marks
    out.append("*" * _mark_stars(prev))
    return "".join(out)


def _render_paragraph_line(inlines: tuple[Inline, ...]) -> str:
    line = _render_inlines(inlines)
    # A paragraph line must not be mistaken for a heading or bullet item.
    if line[:1] in ("#", "-"):
        line = "\\" + line
    return line


def render(rt: RichText) -> str:
    """Serialize to markup text. Input is normalized first; no trailing newline."""
    rt = normalize(rt)
    chunks: list[str] = []
    for block in rt.blocks:
        if isinstance(block, Heading):
            chunks.append("#" * block.level + " " + _render_inlines(block.inlines))
        elif isinstance(block, Paragraph):
            chunks.append(_render_paragraph_line(block.inlines))
        else:
            chunks.append("\n".join("- " + _render_inlines(item) for item in block.items))
    return "\n\n".join(chunks)


def _parse_inlines(text: str) -> tuple[Inline, ...]:
    runs: list[Inline] = []
    buf: list[str] = []
    bold = False
    italic = False

    def flush() -> None:
        if buf:
            marks = tuple(m for m, on in (("bold", bold), ("italic", italic)) if on)
            runs.append(Inline("".join(buf), marks))
            buf.clear()

    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            # Escape: next char is literal; a trailing backslash is itself literal.
            if i + 1 < len(text):
                buf.append(text[i + 1])
                i += 2
            else:
                buf.append("\\")
                i += 1
        elif ch == "*":
            n = 0
            while i + n < len(text) and text[i + n] == "*":
                n += 1
            flush()
            open_count = (2 if bold else 0) + (1 if italic else 0)
            if n >= open_count:
                # Close everything, then the remainder opens new marks.
                opened = min(n - open_count, 3)
                bold = opened >= 2
                italic = opened in (1, 3)
            elif n == 1:
                italic = not italic
            else:
                bold = not bold
            i += n
        else:
            buf.append(ch)
            i += 1
    flush()
    return tuple(runs)


def parse(text: str) -> RichText:
    """Parse markup text. Total on any input; result is in normal form."""
    blocks: list[Block] = []
    para_lines: list[str] = []
    bullet_items: list[tuple[Inline, ...]] = []

    def flush_paragraph() -> None:
        if para_lines:
            blocks.append(Paragraph(_parse_inlines(" ".join(para_lines))))
            para_lines.clear()

    def flush_bullets() -> None:
        if bullet_items:
            blocks.append(BulletList(tuple(bullet_items)))
            bullet_items.clear()

    for line in text.split("\n"):
        if not line.strip():
            flush_paragraph()
            flush_bullets()
            continue
        heading = _HEADING_RE.match(line)
        if heading is not None:
            flush_paragraph()
            flush_bullets()
            blocks.append(Heading(len(heading.group(1)), _parse_inlines(heading.group(2))))
        elif line.startswith("- "):
            flush_paragraph()
            bullet_items.append(_parse_inlines(line[2:]))
        else:
            flush_bullets()
            para_lines.append(line)
    flush_paragraph()
    flush_bullets()
    return normalize(RichText(tuple(blocks)))

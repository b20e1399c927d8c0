"""Constrained rich-text block model.

A document body is an ordered list of blocks: headings (levels 1..3),
paragraphs, and flat bullet lists. Inline runs carry at most the marks
``bold`` and ``italic``. The model is deliberately small so that every
value round-trips losslessly through both the canonical JSON wire form
and the plain-text markup codec (see :mod:`bizplan.markup`).

Normal form, produced by :func:`normalize`:

* no empty inline runs, and adjacent runs with identical marks are merged;
* leading/trailing whitespace is stripped at block (and bullet-item) edges;
* blocks and bullet items left with no runs are dropped.

``normalize`` is idempotent. Values are immutable; construction validates
structural rules (heading levels, mark names, no newlines inside runs) but
does not force normal form, so that normalization itself is testable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

VALID_MARKS = ("bold", "italic")

# Characters per section at which the completeness score saturates.
COMPLETENESS_TARGET_CHARS = 600


class InvalidRichText(ValueError):
    """Raised when a value violates the structural rules of the model."""


@dataclass(frozen=True)
class Inline:
    """A run of text with a (possibly empty) set of marks."""

    text: str
    marks: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if "\n" in self.text:
            raise InvalidRichText("inline runs must not contain newlines")
        for mark in self.marks:
            if mark not in VALID_MARKS:
                raise InvalidRichText(f"unknown mark: {mark!r}")
        if len(set(self.marks)) != len(self.marks):
            raise InvalidRichText("duplicate marks on inline run")
        # Store marks in a fixed order so equality and serialization are canonical.
        object.__setattr__(self, "marks", tuple(m for m in VALID_MARKS if m in self.marks))


@dataclass(frozen=True)
class Heading:
    level: int
    inlines: tuple[Inline, ...]

    def __post_init__(self) -> None:
        if self.level not in (1, 2, 3):
            raise InvalidRichText(f"heading level must be 1..3, got {self.level}")


@dataclass(frozen=True)
class Paragraph:
    inlines: tuple[Inline, ...]


@dataclass(frozen=True)
class BulletList:
    items: tuple[tuple[Inline, ...], ...]


Block = Union[Heading, Paragraph, BulletList]


@dataclass(frozen=True)
class RichText:
    blocks: tuple[Block, ...] = field(default_factory=tuple)

    def is_empty(self) -> bool:
        return not self.blocks


def empty() -> RichText:
    return RichText(())


def text_of(inlines: tuple[Inline, ...]) -> str:
    return "".join(run.text for run in inlines)


def plain_text(rt: RichText) -> str:
    """All text content, blocks and bullet items separated by newlines."""
    lines: list[str] = []
    for block in rt.blocks:
        if isinstance(block, BulletList):
            lines.extend(text_of(item) for item in block.items)
        else:
            lines.append(text_of(block.inlines))
    return "\n".join(lines)


def _normalize_inlines(inlines: tuple[Inline, ...], strip_edges: bool) -> tuple[Inline, ...]:
    merged: list[Inline] = []
    for run in inlines:
        if run.text == "":
            continue
        if merged and merged[-1].marks == run.marks:
            merged[-1] = Inline(merged[-1].text + run.text, run.marks)
        else:
            merged.append(run)
    if strip_edges:
        while merged:
            stripped = merged[0].text.lstrip()
            if stripped:
                merged[0] = Inline(stripped, merged[0].marks)
                break
            merged.pop(0)
        while merged:
            stripped = merged[-1].text.rstrip()
            if stripped:
                merged[-1] = Inline(stripped, merged[-1].marks)
                break
            merged.pop()
        # Edge stripping may have emptied runs between merges; merge once more.
        if merged:
            return _normalize_inlines(tuple(merged), strip_edges=False)
    return tuple(merged)


def normalize(rt: RichText) -> RichText:
    """Return the normal form of ``rt``. Idempotent."""
    blocks: list[Block] = []
    for block in rt.blocks:
        if isinstance(block, Heading):
            inlines = _normalize_inlines(block.inlines, strip_edges=True)
            if inlines:
                blocks.append(Heading(block.level, inlines))
        elif isinstance(block, Paragraph):
            inlines = _normalize_inlines(block.inlines, strip_edges=True)
            if inlines:
                blocks.append(Paragraph(inlines))
        else:
            items = []
            for item in block.items:
                normalized = _normalize_inlines(item, strip_edges=True)
                if normalized:
                    items.append(normalized)
            if items:
                blocks.append(BulletList(tuple(items)))
    return RichText(tuple(blocks))


def non_whitespace_chars(rt: RichText) -> int:
    return sum(1 for ch in plain_text(rt) if not ch.isspace())


def completeness(rt: RichText) -> float:
    """Deterministic fullness heuristic in [0, 1].

    min(1, non-whitespace chars / 600), halved when the content has
    fewer than two blocks. Exactly 0.0 for content with no visible text.
    """
    chars = non_whitespace_chars(rt)
    if chars == 0:
        return 0.0
    structure = 1.0 if len(rt.blocks) >= 2 else 0.5
    return min(1.0, chars / COMPLETENESS_TARGET_CHARS) * structure


# Wire form: plain dicts matching the canonical interchange serialization.

def inline_to_wire(run: Inline) -> dict:
    return {"text": run.text, "marks": list(run.marks)}


def to_wire(rt: RichText) -> dict:
    blocks = []
    for block in rt.blocks:
        if isinstance(block, Heading):
            blocks.append({
                "type": "heading",
                "level": block.level,
                "inlines": [inline_to_wire(r) for r in block.inlines],
            })
        elif isinstance(block, Paragraph):
            blocks.append({
                "type": "paragraph",
                "inlines": [inline_to_wire(r) for r in block.inlines],
            })
        else:
            blocks.append({
                "type": "bullet_list",
                "items": [[inline_to_wire(r) for r in item] for item in block.items],
            })
    return {"blocks": blocks}


def _inline_from_wire(data: object) -> Inline:
    if not isinstance(data, dict) or not isinstance(data.get("text"), str):
        raise InvalidRichText("inline run must be an object with a text field")
    marks = data.get("marks", [])
    if not isinstance(marks, list) or not all(isinstance(m, str) for m in marks):
        raise InvalidRichText("marks must be a list of strings")
    return Inline(data["text"], tuple(marks))


def from_wire(data: object) -> RichText:
    """Parse the wire form, raising InvalidRichText for malformed input."""
    if not isinstance(data, dict) or not isinstance(data.get("blocks"), list):
        raise InvalidRichText("rich text must be an object with a blocks list")
    blocks: list[Block] = []
    for raw in data["blocks"]:
        if not isinstance(raw, dict):
            raise InvalidRichText("block must be an object")
        kind = raw.get("type")
        if kind == "heading":
            level = raw.get("level")
            if not isinstance(level, int) or isinstance(level, bool):
                raise InvalidRichText("heading level must be an integer")
            inlines = raw.get("inlines")
            if not isinstance(inlines, list):
                raise InvalidRichText("heading inlines must be a list")
            blocks.append(Heading(level, tuple(_inline_from_wire(r) for r in inlines)))
        elif kind == "paragraph":
            inlines = raw.get("inlines")
            if not isinstance(inlines, list):
                raise InvalidRichText("paragraph inlines must be a list")
            blocks.append(Paragraph(tuple(_inline_from_wire(r) for r in inlines)))
        elif kind == "bullet_list":
            items = raw.get("items")
            if not isinstance(items, list) or not all(isinstance(i, list) for i in items):
                raise InvalidRichText("bullet_list items must be a list of lists")
            blocks.append(BulletList(tuple(
                tuple(_inline_from_wire(r) for r in item) for item in items
            )))
        else:
            raise InvalidRichText(f"unknown block type: {kind!r}")
    return RichText(tuple(blocks))
